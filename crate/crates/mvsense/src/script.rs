//! Line-oriented scenario files.
//!
//! ```text
//! mvsense-scenario 1
//! # comment
//! name = assembly
//! noise.depth_sigma = 0.005
//! workspace.min = -2, -1.2, 0
//! camera eye=1.4,2.6,2.1 target=0.2,0,1 focal=300 size=160x120 pan=-1,1 tilt=-0.5,0.5 rate=1.5 active=true
//! waypoint t=0 torso=-0.9,-0.2,1.34 angles=0,0,0 ula=0.15,-0.1 ...
//! keyframe t=0 joints=0,1.1,0.75;0,1.1,1.1;...
//! ```
//!
//! Scalar settings are `key = value`; `camera`, `waypoint` and `keyframe`
//! lines are records of `field=value` tokens. Missing scalars take their
//! defaults, unknown keys and fields are rejected with the offending line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use mvsense_core::body::{BodyDimensions, BodyPose, KeypartId};
use mvsense_core::camera::AngleLimits;
use mvsense_core::geometry::Vec3;
use mvsense_core::keypoint::WindowParams;
use mvsense_core::scenario::{
    template, CameraSpec, HumanWaypoint, NoiseParams, PipelineParams, RobotKeyframe, RobotScript, Scenario,
    SchedulerParams, Workspace,
};

pub const HEADER: &str = "mvsense-scenario";
pub const VERSION: u32 = 1;

/// Prefix selecting a built-in template instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{}{field}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { line: Option<usize>, field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("unknown built-in scenario '{0}' (expected scene1, scene2 or scene3)")]
    UnknownBuiltin(String),
}

fn syntax(line: usize, message: impl Into<String>) -> ScriptError {
    ScriptError::Syntax { line, message: message.into() }
}

enum Field<'a> {
    Float(&'a mut f64),
    Count(&'a mut usize),
    Seed(&'a mut u64),
    Text(&'a mut String),
    Point(&'a mut Vec3),
    List(&'a mut Vec<f64>),
}

/// Every scalar key with a handle on its value.
fn scalars(s: &mut Scenario) -> Vec<(String, Field<'_>)> {
    use Field::*;
    let Scenario { name, seed, duration, frame_rate, robot, noise, keypoint_window, part_window, dims, pipeline, scheduler, workspace, .. } =
        s;
    let mut out: Vec<(String, Field<'_>)> = vec![
        ("name".into(), Text(name)),
        ("seed".into(), Seed(seed)),
        ("duration".into(), Float(duration)),
        ("frame_rate".into(), Float(frame_rate)),
        ("robot.radii".into(), List(&mut robot.radii)),
        ("noise.depth_sigma".into(), Float(&mut noise.depth_sigma)),
        ("noise.dropout".into(), Float(&mut noise.dropout)),
        ("noise.pixel_sigma".into(), Float(&mut noise.pixel_sigma)),
        ("noise.conf_visible".into(), Float(&mut noise.conf_visible)),
        ("noise.conf_occluded".into(), Float(&mut noise.conf_occluded)),
        ("noise.conf_outside".into(), Float(&mut noise.conf_outside)),
        ("noise.max_range".into(), Float(&mut noise.max_range)),
    ];
    for (prefix, w) in [("keypoint_window", keypoint_window), ("part_window", part_window)] {
        out.push((format!("{prefix}.length"), Count(&mut w.length)));
        out.push((format!("{prefix}.gamma"), Float(&mut w.gamma)));
        out.push((format!("{prefix}.alpha"), Float(&mut w.alpha)));
    }
    let BodyDimensions { parts, shoulder_half_width, hip_half_width } = dims;
    for (part, d) in KeypartId::ALL.iter().zip(parts.iter_mut()) {
        out.push((format!("dims.{}.radius", part.code()), Float(&mut d.radius)));
        out.push((format!("dims.{}.height", part.code()), Float(&mut d.height)));
    }
    out.push(("dims.shoulder_half_width".into(), Float(shoulder_half_width)));
    out.push(("dims.hip_half_width".into(), Float(hip_half_width)));
    let PipelineParams { slice_radius, inflation, extraction: e, icp, max_part_points } = pipeline;
    out.extend([
        ("pipeline.slice_radius".into(), Float(slice_radius)),
        ("pipeline.inflation".into(), Float(inflation)),
        ("pipeline.max_part_points".into(), Count(max_part_points)),
        ("pipeline.voxel_size".into(), Float(&mut e.voxel_size)),
        ("pipeline.near".into(), Float(&mut e.near)),
        ("pipeline.far".into(), Float(&mut e.far)),
        ("pipeline.cluster_distance".into(), Float(&mut e.cluster_distance)),
        ("pipeline.min_cluster".into(), Count(&mut e.min_cluster)),
        ("pipeline.robot_margin".into(), Float(&mut e.robot_margin)),
        ("icp.max_iterations".into(), Count(&mut icp.max_iterations)),
        ("icp.tolerance".into(), Float(&mut icp.tolerance)),
        ("icp.trim".into(), Float(&mut icp.trim)),
        ("icp.grid_cell".into(), Float(&mut icp.grid_cell)),
        ("icp.model_spacing".into(), Float(&mut icp.model_spacing)),
        ("scheduler.horizon".into(), Count(&mut scheduler.horizon)),
        ("scheduler.gamma".into(), Float(&mut scheduler.gamma)),
        ("scheduler.pan_cells".into(), Count(&mut scheduler.pan_cells)),
        ("scheduler.tilt_cells".into(), Count(&mut scheduler.tilt_cells)),
        ("scheduler.sigma_growth".into(), Float(&mut scheduler.sigma_growth)),
        ("scheduler.sigma_reset".into(), Float(&mut scheduler.sigma_reset)),
        ("scheduler.sigma_unknown".into(), Float(&mut scheduler.sigma_unknown)),
        ("scheduler.extrapolation_limit".into(), Float(&mut scheduler.extrapolation_limit)),
        ("scheduler.exhaustive_limit".into(), Count(&mut scheduler.exhaustive_limit)),
        ("workspace.min".into(), Point(&mut workspace.min)),
        ("workspace.max".into(), Point(&mut workspace.max)),
    ]);
    out
}

/// Defaults for every scalar; no cameras, waypoints or keyframes.
pub fn blank() -> Scenario {
    Scenario {
        name: "unnamed".into(),
        seed: 1,
        duration: 10.0,
        frame_rate: 10.0,
        cameras: Vec::new(),
        human: Vec::new(),
        robot: RobotScript::default(),
        noise: NoiseParams::default(),
        keypoint_window: WindowParams::default(),
        part_window: WindowParams::default(),
        dims: BodyDimensions::default(),
        pipeline: PipelineParams::default(),
        scheduler: SchedulerParams::default(),
        workspace: Workspace { min: Vec3::new(-2.0, -2.0, 0.0), max: Vec3::new(2.0, 2.0, 2.2) },
    }
}

fn float(v: &str) -> Result<f64, String> {
    let x: f64 = v.trim().parse().map_err(|_| format!("'{}' is not a number", v.trim()))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{}' is not finite", v.trim()))
    }
}

fn floats(v: &str, n: Option<usize>) -> Result<Vec<f64>, String> {
    let out: Vec<f64> = if v.trim().is_empty() { Vec::new() } else { v.split(',').map(float).collect::<Result<_, _>>()? };
    match n {
        Some(n) if out.len() != n => Err(format!("expected {n} comma-separated numbers, got {}", out.len())),
        _ => Ok(out),
    }
}

fn point(v: &str) -> Result<Vec3, String> {
    let f = floats(v, Some(3))?;
    Ok(Vec3::new(f[0], f[1], f[2]))
}

fn pair(v: &str) -> Result<[f64; 2], String> {
    let f = floats(v, Some(2))?;
    Ok([f[0], f[1]])
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("'{v}' is not true or false")),
    }
}

fn set(field: Field<'_>, v: &str) -> Result<(), String> {
    match field {
        Field::Float(x) => *x = float(v)?,
        Field::Count(x) => *x = v.parse().map_err(|_| format!("'{v}' is not a non-negative integer"))?,
        Field::Seed(x) => *x = v.parse().map_err(|_| format!("'{v}' is not a non-negative integer"))?,
        Field::Text(x) => *x = v.to_string(),
        Field::Point(x) => *x = point(v)?,
        Field::List(x) => *x = floats(v, None)?,
    }
    Ok(())
}

fn show(field: &Field<'_>) -> String {
    let join = |xs: &mut dyn Iterator<Item = f64>| xs.map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    match field {
        Field::Float(x) => x.to_string(),
        Field::Count(x) => x.to_string(),
        Field::Seed(x) => x.to_string(),
        Field::Text(x) => x.to_string(),
        Field::Point(p) => join(&mut p.iter().copied()),
        Field::List(xs) => join(&mut xs.iter().copied()),
    }
}

/// Splits a record line into `field=value` tokens, rejecting repeats.
fn tokens(rest: &str, line: usize) -> Result<BTreeMap<&str, &str>, ScriptError> {
    let mut out = BTreeMap::new();
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| syntax(line, format!("expected field=value, got '{tok}'")))?;
        if out.insert(k, v).is_some() {
            return Err(syntax(line, format!("field '{k}' given twice")));
        }
    }
    Ok(out)
}

struct Record<'a> {
    line: usize,
    kind: &'static str,
    fields: BTreeMap<&'a str, &'a str>,
}

impl<'a> Record<'a> {
    fn take(&mut self, key: &str) -> Result<&'a str, ScriptError> {
        self.fields.remove(key).ok_or_else(|| syntax(self.line, format!("{} needs '{key}'", self.kind)))
    }

    fn parse<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<T, ScriptError> {
        let v = self.take(key)?;
        f(v).map_err(|m| syntax(self.line, format!("{key}: {m}")))
    }

    fn finish(self) -> Result<(), ScriptError> {
        match self.fields.keys().next() {
            Some(k) => Err(syntax(self.line, format!("unknown {} field '{k}'", self.kind))),
            None => Ok(()),
        }
    }
}

fn camera(mut r: Record<'_>) -> Result<CameraSpec, ScriptError> {
    let size = r.parse("size", |v| {
        let (w, h) = v.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
        let dim = |d: &str| d.parse::<u32>().map_err(|_| format!("'{d}' is not a pixel count"));
        Ok((dim(w)?, dim(h)?))
    })?;
    let limits = |v: &str| pair(v).map(|[a, b]| AngleLimits::new(a, b));
    let c = CameraSpec {
        eye: r.parse("eye", point)?,
        target: r.parse("target", point)?,
        focal: r.parse("focal", float)?,
        width: size.0,
        height: size.1,
        pan_limits: r.parse("pan", limits)?,
        tilt_limits: r.parse("tilt", limits)?,
        max_rate: r.parse("rate", float)?,
        active: r.parse("active", boolean)?,
    };
    r.finish()?;
    Ok(c)
}

fn waypoint(mut r: Record<'_>) -> Result<HumanWaypoint, ScriptError> {
    let time = r.parse("t", float)?;
    let mut pose = BodyPose { torso_position: r.parse("torso", point)?, ..BodyPose::default() };
    let a = r.parse("angles", point)?;
    pose.torso_angles = [a.x, a.y, a.z];
    for part in &KeypartId::ALL[1..] {
        pose.set_angles(*part, r.parse(part.code(), pair)?);
    }
    r.finish()?;
    Ok(HumanWaypoint { time, pose })
}

fn keyframe(mut r: Record<'_>) -> Result<RobotKeyframe, ScriptError> {
    let time = r.parse("t", float)?;
    let joints = r.parse("joints", |v| v.split(';').map(point).collect::<Result<Vec<_>, _>>())?;
    r.finish()?;
    Ok(RobotKeyframe { time, joints })
}

/// Parses and validates a scenario file's contents.
pub fn parse(text: &str) -> Result<Scenario, ScriptError> {
    let mut s = blank();
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if !header {
            let version = l
                .strip_prefix(HEADER)
                .map(str::trim)
                .ok_or_else(|| syntax(line, format!("expected header '{HEADER} {VERSION}'")))?;
            if version != VERSION.to_string() {
                return Err(syntax(line, format!("unsupported version '{version}' (this build reads {VERSION})")));
            }
            header = true;
            continue;
        }
        let (kind, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let record = |kind| -> Result<Record<'_>, ScriptError> { Ok(Record { line, kind, fields: tokens(rest, line)? }) };
        match kind {
            "camera" => {
                lines.entry("camera".into()).or_insert(line);
                s.cameras.push(camera(record("camera")?)?);
            }
            "waypoint" => {
                lines.entry("waypoint".into()).or_insert(line);
                s.human.push(waypoint(record("waypoint")?)?);
            }
            "keyframe" => {
                lines.entry("robot.keyframe".into()).or_insert(line);
                s.robot.keyframes.push(keyframe(record("keyframe")?)?);
            }
            _ => {
                let (key, value) =
                    l.split_once('=').ok_or_else(|| syntax(line, format!("expected 'key = value' or a record, got '{l}'")))?;
                let (key, value) = (key.trim(), value.trim());
                let field = scalars(&mut s)
                    .into_iter()
                    .find(|(k, _)| k == key)
                    .map(|(_, f)| f)
                    .ok_or_else(|| syntax(line, format!("unknown key '{key}'")))?;
                set(field, value).map_err(|m| syntax(line, format!("{key}: {m}")))?;
                if lines.insert(key.to_string(), line).is_some() {
                    return Err(syntax(line, format!("key '{key}' given twice")));
                }
            }
        }
    }
    if !header {
        return Err(syntax(1, format!("empty file; expected header '{HEADER} {VERSION}'")));
    }
    s.validate().map_err(|e| {
        // Point at the line that set the field, or at the first line of its group.
        let line = lines
            .get(&e.field)
            .or_else(|| lines.iter().find(|(k, _)| k.starts_with(&format!("{}.", e.field))).map(|(_, l)| l))
            .or_else(|| e.field.split('.').next().and_then(|g| lines.get(g)))
            .copied();
        ScriptError::Invalid { line, field: e.field, message: e.message }
    })?;
    Ok(s)
}

fn join3(p: &Vec3) -> String {
    format!("{},{},{}", p.x, p.y, p.z)
}

/// Canonical text for a scenario; `parse(&emit(s))` reproduces `s` exactly.
pub fn emit(s: &Scenario) -> String {
    let mut out = format!("{HEADER} {VERSION}\n");
    let mut copy = s.clone();
    for (key, field) in scalars(&mut copy) {
        let _ = writeln!(out, "{key} = {}", show(&field));
    }
    for c in &s.cameras {
        let _ = writeln!(
            out,
            "camera eye={} target={} focal={} size={}x{} pan={},{} tilt={},{} rate={} active={}",
            join3(&c.eye),
            join3(&c.target),
            c.focal,
            c.width,
            c.height,
            c.pan_limits.min,
            c.pan_limits.max,
            c.tilt_limits.min,
            c.tilt_limits.max,
            c.max_rate,
            c.active
        );
    }
    for w in &s.human {
        let [ax, ay, az] = w.pose.torso_angles;
        let _ = write!(out, "waypoint t={} torso={} angles={ax},{ay},{az}", w.time, join3(&w.pose.torso_position));
        for part in &KeypartId::ALL[1..] {
            let [a, b] = w.pose.angles(*part);
            let _ = write!(out, " {}={a},{b}", part.code());
        }
        out.push('\n');
    }
    for k in &s.robot.keyframes {
        let joints: Vec<String> = k.joints.iter().map(join3).collect();
        let _ = writeln!(out, "keyframe t={} joints={}", k.time, joints.join(";"));
    }
    out
}

/// Loads `builtin:NAME` templates or reads and parses a file.
pub fn load(script: &str) -> Result<Scenario, ScriptError> {
    if let Some(name) = script.strip_prefix(BUILTIN_PREFIX) {
        return template(name).ok_or_else(|| ScriptError::UnknownBuiltin(name.into()));
    }
    let text = std::fs::read_to_string(Path::new(script)).map_err(|source| ScriptError::Io { path: script.into(), source })?;
    parse(&text)
}
