//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mvsense_core::scenario::{Scenario, TEMPLATE_NAMES};
use mvsense_core::trial::{TrialMetrics, TrialRunner, VisionConfig};

use crate::compare::compare;
use crate::metrics::{summary_json, write_csv, Timing};
use crate::script::{emit, load, BUILTIN_PREFIX};
use crate::dump;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "mvsense", version, about = "Multi-camera active human sensing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file, or builtin:scene1 / builtin:scene2 / builtin:scene3.
    #[arg(long)]
    script: String,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Vision system: multi-active, multi-fixed, single-active or single-fixed.
    #[arg(long, default_value = "multi-active")]
    config: VisionConfig,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial and write metrics.csv, summary.json and timing.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Stop after this many frames.
        #[arg(long)]
        frames: Option<usize>,
        /// Also write every frame's artifacts under frames/.
        #[arg(long)]
        dump: bool,
    },
    /// Compare vision systems over scenarios and seeds.
    Compare {
        /// Scenario files or builtins; all three builtins when omitted.
        #[arg(long)]
        script: Vec<String>,
        /// First seed; trial k uses seed + k.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Trials per scenario and configuration.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Restrict to these configurations (repeatable); all four when omitted.
        #[arg(long)]
        config: Vec<VisionConfig>,
        /// Write compare.json here as well as printing the table.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Truncate every trial to this many frames.
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Write the masks, clouds, keypoints and tree of selected frames.
    DumpFrame {
        #[command(flatten)]
        common: Common,
        /// Frames to dump, e.g. `12` or `3,10-14`.
        #[arg(long)]
        frames: String,
    },
    /// Parse and check a scenario.
    Validate {
        #[arg(long)]
        script: String,
        /// Print the canonical form of the scenario.
        #[arg(long)]
        emit: bool,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn scenario(script: &str, frames: Option<usize>) -> Result<Scenario, CliError> {
    let mut s = load(script).map_err(config)?;
    if let Some(n) = frames {
        if n < s.frame_count() {
            s.duration = n as f64 / s.frame_rate;
        }
    }
    Ok(s)
}

/// Parses `3,10-14` into sorted, unique frame indices.
pub fn frame_list(list: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("'{s}' is not a frame index"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range '{part}'"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("no frames given".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn write_metrics(m: &TrialMetrics, timing: &Timing, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let csv_path = dir.join("metrics.csv");
    let file = fs::File::create(&csv_path).map_err(io_at(&csv_path))?;
    write_csv(m, std::io::BufWriter::new(file)).map_err(|e| CliError::Runtime(format!("{}: {e}", csv_path.display())))?;
    let json = dir.join("summary.json");
    fs::write(&json, summary_json(m)).map_err(io_at(&json))?;
    let t = dir.join("timing.json");
    fs::write(&t, serde_json::to_string_pretty(timing).expect("timing serializes") + "\n").map_err(io_at(&t))?;
    Ok(())
}

fn simulate(c: &Common, frames: Option<usize>, dump_all: bool) -> Result<(), CliError> {
    let s = scenario(&c.script, frames)?;
    let mut runner = TrialRunner::new(&s, c.config, c.seed).map_err(config)?;
    let mut records = Vec::with_capacity(runner.frame_count());
    let mut timing = Timing::default();
    loop {
        let t = Instant::now();
        let Some(rec) = runner.step() else { break };
        timing.push(t.elapsed().as_secs_f64() * 1000.0);
        if dump_all {
            let dir = c.out_dir.join("frames").join(format!("{:04}", rec.metrics.frame));
            dump::write_frame(&rec, &dir).map_err(io_at(&dir))?;
        }
        records.push(rec.metrics);
    }
    let m = TrialMetrics { scenario: s.name.clone(), config: c.config, seed: c.seed.unwrap_or(s.seed), frames: records };
    write_metrics(&m, &timing, &c.out_dir)?;
    let conf = m.confusion();
    println!(
        "{} {} seed {}: {} frames, accuracy {:.4}, recall {:.4} -> {}",
        m.scenario,
        m.config,
        m.seed,
        m.frames.len(),
        conf.accuracy(),
        conf.recall(),
        c.out_dir.display()
    );
    Ok(())
}

fn compare_cmd(
    scripts: &[String],
    seed: u64,
    trials: usize,
    configs: &[VisionConfig],
    out_dir: Option<&Path>,
    frames: Option<usize>,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(config("--trials must be at least 1"));
    }
    let sources: Vec<String> =
        if scripts.is_empty() { TEMPLATE_NAMES.iter().map(|n| format!("{BUILTIN_PREFIX}{n}")).collect() } else { scripts.to_vec() };
    let scenarios = sources.iter().map(|s| scenario(s, frames)).collect::<Result<Vec<_>, _>>()?;
    let configs = if configs.is_empty() { VisionConfig::ALL.to_vec() } else { configs.to_vec() };
    let seeds: Vec<u64> = (0..trials as u64).map(|k| seed.wrapping_add(k)).collect();
    let sweep = compare(&scenarios, &configs, &seeds).map_err(config)?;
    print!("{}", sweep.table());
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
        let path = dir.join("compare.json");
        fs::write(&path, serde_json::to_string_pretty(&sweep).expect("comparison serializes") + "\n").map_err(io_at(&path))?;
    }
    Ok(())
}

fn dump_frames(c: &Common, frames: &str) -> Result<(), CliError> {
    let wanted = frame_list(frames).map_err(config)?;
    let s = scenario(&c.script, None)?;
    let mut runner = TrialRunner::new(&s, c.config, c.seed).map_err(config)?;
    let last = *wanted.last().expect("frame list is non-empty");
    if last >= runner.frame_count() {
        return Err(config(format!("frame {last} is beyond the trial's {} frames", runner.frame_count())));
    }
    let mut next = wanted.iter().peekable();
    while let Some(rec) = runner.step() {
        if next.peek() == Some(&&rec.metrics.frame) {
            next.next();
            let dir = c.out_dir.join(format!("frame_{:04}", rec.metrics.frame));
            dump::write_frame(&rec, &dir).map_err(io_at(&dir))?;
            println!("frame {} -> {}", rec.metrics.frame, dir.display());
        }
        if next.peek().is_none() {
            break;
        }
    }
    Ok(())
}

fn validate(script: &str, show: bool) -> Result<(), CliError> {
    let s = load(script).map_err(config)?;
    if show {
        print!("{}", emit(&s));
    } else {
        println!(
            "ok: {} ({} cameras, {} waypoints, {} robot keyframes, {} frames)",
            s.name,
            s.cameras.len(),
            s.human.len(),
            s.robot.keyframes.len(),
            s.frame_count()
        );
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Simulate { common, frames, dump } => simulate(common, *frames, *dump),
        Command::Compare { script, seed, trials, config, out_dir, frames } => {
            compare_cmd(script, *seed, *trials, config, out_dir.as_deref(), *frames)
        }
        Command::DumpFrame { common, frames } => dump_frames(common, frames),
        Command::Validate { script, emit } => validate(script, *emit),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("mvsense: {e}");
            e.code()
        }
    }
}
