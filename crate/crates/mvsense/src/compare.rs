//! Sweeps of the four vision configurations over scenarios and seeds.

use std::fmt::Write as _;

use mvsense_core::scenario::{Scenario, ScenarioError};
use mvsense_core::trial::{TrialRunner, VisionConfig};
use rayon::prelude::*;
use serde::Serialize;

/// Accuracy statistics of one configuration on one scenario (or the total).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub mean: f64,
    /// Population standard deviation over seeds; 0 for a single trial.
    pub std: f64,
    pub mean_recall: f64,
    pub accuracies: Vec<f64>,
}

impl Cell {
    fn new(accuracies: Vec<f64>, recalls: &[f64]) -> Self {
        let (mean, std) = mean_std(&accuracies);
        Self { mean, std, mean_recall: mean_std(recalls).0, accuracies }
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub config: String,
    /// One cell per scenario, in input order.
    pub scenes: Vec<Cell>,
    /// Per seed, the accuracy averaged over scenarios.
    pub total: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub scenarios: Vec<String>,
    pub seeds: Vec<u64>,
    pub rows: Vec<Row>,
}

impl Comparison {
    pub fn row(&self, config: VisionConfig) -> Option<&Row> {
        self.rows.iter().find(|r| r.config == config.name())
    }

    /// Rows of configurations, columns of scenarios plus the total.
    pub fn table(&self) -> String {
        let mut s = format!("{:<14}", "");
        for name in self.scenarios.iter().map(String::as_str).chain(["total"]) {
            let _ = write!(s, " {name:>17}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{:<14}", r.config);
            for c in r.scenes.iter().chain([&r.total]) {
                let _ = write!(s, " {:>17}", format!("{:.4} ± {:.4}", c.mean, c.std));
            }
            s.push('\n');
        }
        s
    }
}

/// Runs every (scenario, config, seed) trial in parallel; each seed replaces
/// the scenario's own.
pub fn compare(scenarios: &[Scenario], configs: &[VisionConfig], seeds: &[u64]) -> Result<Comparison, ScenarioError> {
    let jobs: Vec<(usize, usize, usize)> = (0..scenarios.len())
        .flat_map(|si| (0..configs.len()).flat_map(move |ci| (0..seeds.len()).map(move |k| (si, ci, k))))
        .collect();
    let results: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(si, ci, k)| {
            let m = TrialRunner::new(&scenarios[si], configs[ci], Some(seeds[k]))?.run();
            let c = m.confusion();
            Ok((c.accuracy(), c.recall()))
        })
        .collect::<Result<_, ScenarioError>>()?;
    let at = |si: usize, ci: usize, k: usize| results[(si * configs.len() + ci) * seeds.len() + k];
    let rows = (0..configs.len())
        .map(|ci| {
            let scenes = (0..scenarios.len())
                .map(|si| {
                    let (acc, rec): (Vec<f64>, Vec<f64>) = (0..seeds.len()).map(|k| at(si, ci, k)).unzip();
                    Cell::new(acc, &rec)
                })
                .collect();
            let per_seed = |pick: fn((f64, f64)) -> f64| -> Vec<f64> {
                (0..seeds.len())
                    .map(|k| (0..scenarios.len()).map(|si| pick(at(si, ci, k))).sum::<f64>() / scenarios.len().max(1) as f64)
                    .collect()
            };
            Row { config: configs[ci].name().into(), scenes, total: Cell::new(per_seed(|r| r.0), &per_seed(|r| r.1)) }
        })
        .collect();
    Ok(Comparison { scenarios: scenarios.iter().map(|s| s.name.clone()).collect(), seeds: seeds.to_vec(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mvsense_core::scenario::template;

    #[test]
    fn single_trial_has_zero_spread() {
        let mut s = template("scene1").unwrap();
        s.duration = 0.5;
        let c = compare(&[s], &[VisionConfig::SingleFixed], &[3]).unwrap();
        assert_eq!(c.rows.len(), 1);
        assert_eq!(c.rows[0].total.std, 0.0);
        assert_eq!(c.rows[0].scenes[0].accuracies.len(), 1);
        assert_eq!(c.rows[0].total.mean, c.rows[0].scenes[0].mean);
        assert!(c.table().contains("single-fixed"));
    }

    #[test]
    fn spread_is_the_population_deviation() {
        let (m, s) = mean_std(&[0.5, 0.7, 0.9]);
        assert!((m - 0.7).abs() < 1e-15);
        assert!((s - (0.08f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
