use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::algorithms::{solve, SolverConfigs};
use crate::bench::{generate_target_batch, run_rng, BenchmarkSpec};
use crate::error::{Error, Result};
use crate::kinematics::KinematicModel;
use crate::ml::RegressionTree;
use crate::solver::SolverId;

/// One solve inside a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub value: f64,
    pub repeat: usize,
    pub target_index: usize,
    pub final_fitness: f64,
    pub elapsed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub value: f64,
    /// Lowest mini-batch mean fitness over the repeats.
    pub best_fitness: f64,
    /// Mean of the two shortest mini-batch times (the only one if a single repeat).
    pub mean_best_two_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub solver: SolverId,
    pub parameter: String,
    pub grid: Vec<f64>,
    pub cells: Vec<SweepCell>,
    pub runs: Vec<SweepRun>,
}

/// Rebuilds the cells of a sweep from its raw runs.
pub fn aggregate_sweep(grid: &[f64], runs: &[SweepRun]) -> Vec<SweepCell> {
    grid.iter()
        .map(|&value| {
            let mine: Vec<&SweepRun> = runs.iter().filter(|r| r.value == value).collect();
            let repeats = mine.iter().map(|r| r.repeat + 1).max().unwrap_or(0);
            let mut fits = Vec::with_capacity(repeats);
            let mut times = Vec::with_capacity(repeats);
            for k in 0..repeats {
                let batch: Vec<&&SweepRun> = mine.iter().filter(|r| r.repeat == k).collect();
                fits.push(batch.iter().map(|r| r.final_fitness).sum::<f64>() / batch.len() as f64);
                times.push(batch.iter().map(|r| r.elapsed).sum::<f64>());
            }
            times.sort_by(f64::total_cmp);
            let fastest = &times[..times.len().min(2)];
            SweepCell {
                value,
                best_fitness: fits.iter().copied().fold(f64::INFINITY, f64::min),
                mean_best_two_time: fastest.iter().sum::<f64>() / fastest.len() as f64,
            }
        })
        .collect()
}

/// Solves the spec's target batch `repeats` times for every value of
/// `parameter` (a field of `solver`'s config, e.g. `population_size`).
#[allow(clippy::too_many_arguments)]
pub fn sweep_parameter(
    model: &KinematicModel,
    spec: &BenchmarkSpec,
    configs: &SolverConfigs,
    solver: SolverId,
    parameter: &str,
    grid: &[f64],
    repeats: usize,
    tree: Option<&RegressionTree>,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Empty("sweep grid"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config("sweep grid must be strictly increasing"));
    }
    if repeats < 1 {
        return Err(Error::config("sweep repeats must be at least 1"));
    }
    let key = format!("{}.{parameter}", solver.name().to_ascii_lowercase());
    let variants: Vec<SolverConfigs> = grid
        .iter()
        .map(|&v| {
            let mut c = *configs;
            c.set(&key, v).map(|_| c)
        })
        .collect::<Result<_>>()?;
    if solver == SolverId::Dtnr && tree.is_none() {
        return Err(Error::config("DTNR sweep needs a regression tree"));
    }
    let budget = spec.budget()?;
    let targets = generate_target_batch(model, spec);
    let mut runs = Vec::new();
    for (&value, cfg) in grid.iter().zip(&variants) {
        for repeat in 0..repeats {
            for (t, target) in targets.iter().enumerate() {
                let mut rng = run_rng(spec.master_seed, solver, t, repeat);
                let start = Instant::now();
                let res = solve(solver, model, target, cfg, &budget, tree, &mut rng)?;
                runs.push(SweepRun {
                    value,
                    repeat,
                    target_index: t,
                    final_fitness: res.final_fitness,
                    elapsed: start.elapsed().as_secs_f64(),
                });
            }
        }
    }
    Ok(SweepResult {
        solver,
        parameter: parameter.to_string(),
        grid: grid.to_vec(),
        cells: aggregate_sweep(grid, &runs),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Budget;

    fn spec(n: usize) -> BenchmarkSpec {
        BenchmarkSpec {
            n_targets: n,
            algorithms: vec![SolverId::Pso],
            ..Default::default()
        }
    }

    #[test]
    fn single_cell_equals_direct_solve() {
        let model = KinematicModel::lbr_iiwa_r800();
        let s = spec(1);
        let configs = SolverConfigs::default();
        let res = sweep_parameter(&model, &s, &configs, SolverId::Pso, "num_particles", &[12.0], 1, None).unwrap();
        let mut direct_cfg = configs;
        direct_cfg.pso.num_particles = 12;
        let target = generate_target_batch(&model, &s)[0];
        let mut rng = run_rng(s.master_seed, SolverId::Pso, 0, 0);
        let direct = solve(SolverId::Pso, &model, &target, &direct_cfg, &Budget::default(), None, &mut rng).unwrap();
        assert_eq!(res.cells.len(), 1);
        assert_eq!(res.cells[0].best_fitness.to_bits(), direct.final_fitness.to_bits());
        assert_eq!(res.cells[0].mean_best_two_time, res.runs[0].elapsed);
    }

    #[test]
    fn cells_rederive_from_runs() {
        let model = KinematicModel::lbr_iiwa_r800();
        let res = sweep_parameter(
            &model,
            &spec(2),
            &SolverConfigs::default(),
            SolverId::Ga,
            "population_size",
            &[10.0, 30.0],
            3,
            None,
        )
        .unwrap();
        assert_eq!(res.runs.len(), 2 * 3 * 2);
        assert_eq!(aggregate_sweep(&res.grid, &res.runs), res.cells);
        let json = serde_json::to_string(&res.runs).unwrap();
        let back: Vec<SweepRun> = serde_json::from_str(&json).unwrap();
        assert_eq!(aggregate_sweep(&res.grid, &back), res.cells);
    }

    #[test]
    fn rejects_bad_input() {
        let model = KinematicModel::lbr_iiwa_r800();
        let c = SolverConfigs::default();
        let s = spec(1);
        assert!(matches!(
            sweep_parameter(&model, &s, &c, SolverId::Ga, "nonsense", &[1.0], 1, None),
            Err(Error::UnknownParameter { .. })
        ));
        assert!(sweep_parameter(&model, &s, &c, SolverId::Ga, "population_size", &[30.0, 10.0], 1, None).is_err());
    }
}
