//! Metrics files: a per-frame CSV, a JSON summary and a timing file.
//!
//! CSV columns, in order: `frame,time_s,part,truth,predicted,axis_error_deg,position_error_m`.
//! Error columns are empty when the part has no scored estimate. Wall-clock
//! timings live in their own file so the metrics stay byte-stable per seed.

use std::io::Write;

use mvsense_core::body::KeypartId;
use mvsense_core::trial::{Confusion, TrialMetrics};
use serde::Serialize;

pub const CSV_HEADER: [&str; 7] = ["frame", "time_s", "part", "truth", "predicted", "axis_error_deg", "position_error_m"];

pub fn write_csv<W: Write>(m: &TrialMetrics, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for f in &m.frames {
        for (part, p) in KeypartId::ALL.iter().zip(&f.parts) {
            let opt = |x: Option<f64>| x.map(|x| format!("{x:.6}")).unwrap_or_default();
            w.write_record([
                f.frame.to_string(),
                format!("{:.4}", f.time),
                part.code().to_string(),
                u8::from(p.truth).to_string(),
                u8::from(p.predicted).to_string(),
                opt(p.axis_error_deg),
                opt(p.position_error_m),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionJson {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl From<Confusion> for ConfusionJson {
    fn from(c: Confusion) -> Self {
        Self { tp: c.tp, tn: c.tn, fp: c.fp, fn_: c.fn_ }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartSummary {
    pub part: &'static str,
    pub accuracy: f64,
    pub recall: f64,
    pub confusion: ConfusionJson,
    pub estimates: usize,
    pub mean_axis_error_deg: Option<f64>,
    pub mean_position_error_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub config: String,
    pub seed: u64,
    pub frames: usize,
    pub accuracy: f64,
    pub recall: f64,
    pub confusion: ConfusionJson,
    pub mean_axis_error_deg: Option<f64>,
    pub mean_position_error_m: Option<f64>,
    /// Mean scheduler objective over frames that planned.
    pub mean_objective: Option<f64>,
    pub parts: Vec<PartSummary>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn summarize(m: &TrialMetrics) -> Summary {
    let c = m.confusion();
    let pose = m.mean_pose_error();
    let parts = KeypartId::ALL
        .iter()
        .map(|&part| {
            let pc = m.part_confusion(part);
            let recs = || m.frames.iter().map(move |f| f.parts[part.index()]);
            PartSummary {
                part: part.code(),
                accuracy: pc.accuracy(),
                recall: pc.recall(),
                confusion: pc.into(),
                estimates: recs().filter(|p| p.axis_error_deg.is_some()).count(),
                mean_axis_error_deg: mean(recs().filter_map(|p| p.axis_error_deg)),
                mean_position_error_m: mean(recs().filter_map(|p| p.position_error_m)),
            }
        })
        .collect();
    Summary {
        scenario: m.scenario.clone(),
        config: m.config.to_string(),
        seed: m.seed,
        frames: m.frames.len(),
        accuracy: c.accuracy(),
        recall: c.recall(),
        confusion: c.into(),
        mean_axis_error_deg: pose.map(|p| p.0),
        mean_position_error_m: pose.map(|p| p.1),
        mean_objective: mean(m.frames.iter().filter_map(|f| f.objective)),
        parts,
    }
}

pub fn summary_json(m: &TrialMetrics) -> String {
    let mut s = serde_json::to_string_pretty(&summarize(m)).expect("summary serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    pub frames: usize,
    pub total_ms: f64,
    pub mean_frame_ms: f64,
    pub max_frame_ms: f64,
    pub frame_ms: Vec<f64>,
}

impl Timing {
    pub fn push(&mut self, ms: f64) {
        self.frames += 1;
        self.total_ms += ms;
        self.max_frame_ms = self.max_frame_ms.max(ms);
        self.mean_frame_ms = self.total_ms / self.frames as f64;
        self.frame_ms.push(ms);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mvsense_core::scenario::template;
    use mvsense_core::trial::{TrialRunner, VisionConfig};

    fn short() -> TrialMetrics {
        let mut s = template("scene1").unwrap();
        s.duration = 0.5;
        TrialRunner::new(&s, VisionConfig::MultiActive, Some(4)).unwrap().run()
    }

    #[test]
    fn csv_has_a_row_per_frame_and_part() {
        let m = short();
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 5 * KeypartId::COUNT);
    }

    #[test]
    fn summary_counts_add_up() {
        let m = short();
        let s = summarize(&m);
        let c = &s.confusion;
        assert_eq!(c.tp + c.tn + c.fp + c.fn_, s.frames * KeypartId::COUNT);
        assert_eq!(s.parts.len(), KeypartId::COUNT);
        let json: serde_json::Value = serde_json::from_str(&summary_json(&m)).unwrap();
        assert_eq!(json["confusion"]["fn"].as_u64().unwrap() as usize, c.fn_);
    }

    #[test]
    fn timing_accumulates() {
        let mut t = Timing::default();
        t.push(2.0);
        t.push(4.0);
        assert_eq!((t.frames, t.total_ms, t.mean_frame_ms, t.max_frame_ms), (2, 6.0, 3.0, 4.0));
    }
}
