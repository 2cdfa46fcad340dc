use serde::{Deserialize, Serialize};

use crate::bench::RunRecord;
use crate::error::{Error, Result};
use crate::solver::SolverId;

/// One row of the performance table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    #[serde(rename = "Algorithm")]
    pub solver: SolverId,
    /// Mean iterations used per run.
    #[serde(rename = "Iteration Count")]
    pub iteration_count: f64,
    #[serde(rename = "Best Fitness")]
    pub best_fitness: f64,
    #[serde(rename = "Worst Fitness")]
    pub worst_fitness: f64,
    #[serde(rename = "Best Time (s)")]
    pub best_time: f64,
    #[serde(rename = "Worst Time (s)")]
    pub worst_time: f64,
    /// Arithmetic mean over the successful runs.
    #[serde(rename = "Average Fitness (mm)")]
    pub average_fitness: Option<f64>,
    #[serde(rename = "Average Fitness Weighted")]
    pub average_fitness_weighted: Option<f64>,
    /// Population standard deviation of the fitness over all runs.
    #[serde(rename = "SD")]
    pub std_dev: f64,
    #[serde(rename = "Average Time (s)")]
    pub average_time: f64,
    #[serde(rename = "Success Rate")]
    pub success_rate: f64,
}

/// Fitness averaged with each run weighted by the length of its trace.
/// `None` for an empty slice.
pub fn weighted_average_fitness(runs: &[RunRecord]) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for r in runs {
        let w = r.trace_samples as f64;
        num += w * r.final_fitness;
        den += w;
    }
    (den > 0.0).then(|| num / den)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Statistics of one algorithm's runs; times and fitness extremes use every
/// run, the fitness averages only the successful ones.
pub fn aggregate(solver: SolverId, runs: &[RunRecord]) -> Result<AlgorithmReport> {
    if runs.is_empty() {
        return Err(Error::Empty("run list"));
    }
    let n = runs.len() as f64;
    let fit = || runs.iter().map(|r| r.final_fitness);
    let time = || runs.iter().map(|r| r.elapsed);
    let successful: Vec<RunRecord> = runs.iter().filter(|r| r.success).cloned().collect();
    let mean_fit = fit().sum::<f64>() / n;
    let var = fit().map(|f| (f - mean_fit).powi(2)).sum::<f64>() / n;
    Ok(AlgorithmReport {
        solver,
        iteration_count: runs.iter().map(|r| r.iterations_used as f64).sum::<f64>() / n,
        best_fitness: fit().fold(f64::INFINITY, f64::min),
        worst_fitness: fit().fold(f64::NEG_INFINITY, f64::max),
        best_time: time().fold(f64::INFINITY, f64::min),
        worst_time: time().fold(f64::NEG_INFINITY, f64::max),
        average_fitness: mean(successful.iter().map(|r| r.final_fitness)),
        average_fitness_weighted: weighted_average_fitness(&successful),
        std_dev: var.sqrt(),
        average_time: time().sum::<f64>() / n,
        success_rate: 100.0 * successful.len() as f64 / n,
    })
}
