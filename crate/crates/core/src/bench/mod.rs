//! Shared target batches, per-algorithm runs, report statistics, parameter
//! sweeps and the files they are written to.

mod export;
mod report;
mod sweep;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithms::{solve, SolverConfigs};
use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, LinkLengths, Position3, RobotConfig};
use crate::ml::{fit_tree, generate_dataset, RegressionTree, TrainedModel, TreeConfig};
use crate::solver::{average_traces, Budget, ConvergenceTrace, SolverId};
use crate::workspace::{SamplerKind, WorkspaceSphere};

pub use export::{
    export_report, read_report_csv, read_runs_jsonl, write_plot_data, write_report_csv, write_runs_jsonl,
    REPORT_COLUMNS,
};
pub use report::{aggregate, weighted_average_fitness, AlgorithmReport};
pub use sweep::{aggregate_sweep, sweep_parameter, SweepCell, SweepResult, SweepRun};

/// Where DTNR gets its tree: a saved model file, or a dataset trained on the fly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeSource {
    /// Model file written by `train`; relative paths resolve against the spec file.
    pub model: Option<PathBuf>,
    pub rows: usize,
    pub noise: f64,
    pub seed: u64,
    pub config: TreeConfig,
}

impl Default for TreeSource {
    fn default() -> Self {
        TreeSource {
            model: None,
            rows: 100_000,
            noise: 0.1,
            seed: 0,
            config: TreeConfig::default(),
        }
    }
}

impl TreeSource {
    pub fn resolve(&self, model: &KinematicModel, base_dir: &Path) -> Result<RegressionTree> {
        match &self.model {
            Some(path) => TrainedModel::load(&base_dir.join(path))?.into_tree(),
            None => {
                let data = generate_dataset(model, self.rows, self.noise, self.seed)?;
                fit_tree(&data.rows, &self.config)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub n_targets: usize,
    /// A run succeeds when its final fitness is below this (mm).
    pub success_threshold: f64,
    pub master_seed: u64,
    pub algorithms: Vec<SolverId>,
    pub repeats_per_target: usize,
    pub sampler: SamplerKind,
    /// Fitness at which a solver stops early (mm).
    pub tolerance: f64,
    /// Worker threads; 0 or 1 runs serially.
    pub parallel: usize,
    /// Arm geometry; the LBR iiwa offsets when absent.
    pub robot: Option<RobotConfig>,
    pub configs: SolverConfigs,
    pub tree: Option<TreeSource>,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            n_targets: 100,
            success_threshold: 1.0,
            master_seed: 0,
            algorithms: SolverId::ALL.to_vec(),
            repeats_per_target: 1,
            sampler: SamplerKind::Ball,
            tolerance: 1e-6,
            parallel: 0,
            robot: None,
            configs: SolverConfigs::default(),
            tree: None,
        }
    }
}

impl BenchmarkSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: BenchmarkSpec = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<benchmark spec>".into(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_targets < 1 || self.repeats_per_target < 1 {
            return Err(Error::config("n_targets and repeats_per_target must be at least 1"));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::config("success_threshold must be positive"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Empty("algorithm list"));
        }
        Budget::with_tolerance(self.tolerance)?;
        self.configs.validate()
    }

    pub fn model(&self) -> Result<KinematicModel> {
        match &self.robot {
            Some(robot) => robot.model(),
            None => Ok(KinematicModel::lbr_iiwa_r800()),
        }
    }

    pub fn budget(&self) -> Result<Budget> {
        Budget::with_tolerance(self.tolerance)
    }
}

/// `n_targets` points drawn from the workspace ball with `master_seed`.
pub fn generate_target_batch(model: &KinematicModel, spec: &BenchmarkSpec) -> Vec<Position3> {
    let sphere = WorkspaceSphere::of(model);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.master_seed);
    (0..spec.n_targets).map(|_| sphere.sample_with(spec.sampler, &mut rng)).collect()
}

/// SHA-256 over the little-endian bytes of every coordinate.
pub fn batch_hash(targets: &[Position3]) -> String {
    let mut hasher = Sha256::new();
    for t in targets {
        for v in t.as_array() {
            hasher.update(v.to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// Random stream of one solve. It depends only on the master seed, the
/// algorithm, the target and the repeat, never on scheduling.
pub fn run_rng(master_seed: u64, solver: SolverId, target_index: usize, repeat: usize) -> ChaCha8Rng {
    let algo = SolverId::ALL.iter().position(|&s| s == solver).unwrap_or(0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(1 + ((algo << 48) | ((target_index as u64) << 16) | repeat as u64));
    rng
}

/// One solve of one target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: SolverId,
    pub target_index: usize,
    pub repeat: usize,
    pub target: Position3,
    pub final_fitness: f64,
    pub iterations_used: usize,
    /// Seconds spent inside the solve call.
    pub elapsed: f64,
    pub converged: bool,
    pub success: bool,
    /// Length of the run's convergence trace.
    pub trace_samples: usize,
    pub joints: JointVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMeta {
    pub master_seed: u64,
    pub n_targets: usize,
    pub repeats_per_target: usize,
    pub success_threshold: f64,
    pub tolerance: f64,
    pub sampler: SamplerKind,
    pub links: LinkLengths,
    pub batch_sha256: String,
    /// Hash of the batch each algorithm actually received.
    pub algorithm_batch_sha256: BTreeMap<SolverId, String>,
    pub parallel: bool,
    pub threads: usize,
    pub configs: SolverConfigs,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkOutcome {
    pub reports: Vec<AlgorithmReport>,
    /// Mean trace over the successful runs; absent when none succeeded.
    pub traces: Vec<(SolverId, Option<ConvergenceTrace>)>,
    pub runs: Vec<RunRecord>,
    pub meta: BenchmarkMeta,
}

/// Solves every target with every listed algorithm and aggregates the runs.
pub fn run_benchmark(
    model: &KinematicModel,
    spec: &BenchmarkSpec,
    configs: &SolverConfigs,
    tree: Option<&RegressionTree>,
) -> Result<BenchmarkOutcome> {
    spec.validate()?;
    configs.validate()?;
    if spec.algorithms.contains(&SolverId::Dtnr) && tree.is_none() {
        return Err(Error::config("DTNR is listed but no regression tree was provided"));
    }
    let budget = spec.budget()?;
    let targets = generate_target_batch(model, spec);
    let hash = batch_hash(&targets);
    let threads = spec.parallel.max(1);
    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::config(format!("cannot start worker threads: {e}")))?,
        )
    } else {
        None
    };

    let jobs: Vec<(usize, usize)> = (0..targets.len())
        .flat_map(|t| (0..spec.repeats_per_target).map(move |r| (t, r)))
        .collect();
    let mut reports = Vec::new();
    let mut traces = Vec::new();
    let mut runs = Vec::new();
    let mut per_algo_hash = BTreeMap::new();

    for &id in &spec.algorithms {
        let batch: &[Position3] = &targets;
        per_algo_hash.insert(id, batch_hash(batch));
        let one = |&(t, r): &(usize, usize)| -> Result<(RunRecord, ConvergenceTrace)> {
            let mut rng = run_rng(spec.master_seed, id, t, r);
            let start = Instant::now();
            let res = solve(id, model, &batch[t], configs, &budget, tree, &mut rng)?;
            let elapsed = start.elapsed().as_secs_f64();
            let record = RunRecord {
                algorithm: id,
                target_index: t,
                repeat: r,
                target: batch[t],
                final_fitness: res.final_fitness,
                iterations_used: res.iterations_used,
                elapsed,
                converged: res.converged,
                success: res.final_fitness < spec.success_threshold,
                trace_samples: res.trace.len(),
                joints: res.joints,
            };
            Ok((record, res.trace))
        };
        let results: Vec<(RunRecord, ConvergenceTrace)> = match &pool {
            Some(pool) => pool.install(|| jobs.par_iter().map(one).collect::<Result<_>>())?,
            None => jobs.iter().map(one).collect::<Result<_>>()?,
        };
        let successful: Vec<ConvergenceTrace> =
            results.iter().filter(|(r, _)| r.success).map(|(_, t)| t.clone()).collect();
        let records: Vec<RunRecord> = results.into_iter().map(|(r, _)| r).collect();
        reports.push(aggregate(id, &records)?);
        traces.push((id, average_traces(&successful).ok()));
        runs.extend(records);
    }

    Ok(BenchmarkOutcome {
        reports,
        traces,
        runs,
        meta: BenchmarkMeta {
            master_seed: spec.master_seed,
            n_targets: spec.n_targets,
            repeats_per_target: spec.repeats_per_target,
            success_threshold: spec.success_threshold,
            tolerance: spec.tolerance,
            sampler: spec.sampler,
            links: model.links(),
            batch_sha256: hash,
            algorithm_batch_sha256: per_algo_hash,
            parallel: pool.is_some(),
            threads,
            configs: *configs,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}
