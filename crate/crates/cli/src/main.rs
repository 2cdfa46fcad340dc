use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ikbench::algorithms::{solve, SolverConfigs};
use ikbench::bench::{
    aggregate, export_report, read_report_csv, read_runs_jsonl, run_benchmark, sweep_parameter, BenchmarkSpec,
};
use ikbench::kinematics::{JointVector, KinematicModel, Position3, RobotConfig};
use ikbench::ml::{
    average_fitness, evaluate, fit_linear, fit_polynomial, fit_tree, generate_dataset, split_dataset, Dataset,
    TrainedModel, TreeConfig,
};
use ikbench::solver::{Budget, SolverId};
use ikbench::workspace::{SamplerKind, WorkspaceSphere};
use ikbench::{seeded_rng, Error};

/// `println!` that ends the process quietly when stdout has been closed.
macro_rules! emit {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            panic!("failed writing to stdout: {e}");
        }
    }};
}

#[derive(Parser)]
#[command(name = "ikbench", version, about = "Inverse kinematics solvers and benchmarks for a 7-DOF arm")]
struct Cli {
    /// Seed for every random draw (default 0). Overrides the master seed of a benchmark spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RobotArgs {
    /// Robot geometry file (TOML). The LBR iiwa 7 R800 offsets are used otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the arm with every link offset equal to 1.
    #[arg(long, conflicts_with = "config")]
    unit: bool,
}

impl RobotArgs {
    fn model(&self) -> ikbench::Result<KinematicModel> {
        match (&self.config, self.unit) {
            (Some(path), _) => RobotConfig::load(path)?.model(),
            (None, true) => Ok(KinematicModel::unit()),
            (None, false) => Ok(KinematicModel::lbr_iiwa_r800()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampler {
    Ball,
    Paper,
}

impl From<Sampler> for SamplerKind {
    fn from(s: Sampler) -> Self {
        match s {
            Sampler::Ball => SamplerKind::Ball,
            Sampler::Paper => SamplerKind::Paper,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Linear,
    Polynomial,
    Tree,
}

#[derive(Subcommand)]
enum Command {
    /// End-effector position (mm) of a joint vector (rad).
    Fk {
        #[command(flatten)]
        robot: RobotArgs,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_joints)]
        joints: JointVector,
    },
    /// Random targets inside the reachable ball, one `x,y,z` per line.
    Sample {
        #[command(flatten)]
        robot: RobotArgs,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_enum, default_value = "ball")]
        sampler: Sampler,
    },
    /// Solve one target with one algorithm.
    Solve {
        #[command(flatten)]
        robot: RobotArgs,
        #[arg(long)]
        algo: SolverId,
        /// Target position `x,y,z` in mm.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_position)]
        target: Position3,
        /// Tree model file, required by DTNR.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Solver hyperparameters (TOML, one table per solver).
        #[arg(long)]
        solver_config: Option<PathBuf>,
        /// Single override such as `ga.population_size=40`; repeatable.
        #[arg(long = "set", value_parser = parse_assignment)]
        overrides: Vec<(String, f64)>,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Use the Metropolis rule exactly as printed, `rand() < exp(ΔE/T)`.
        #[arg(long)]
        sa_paper_literal: bool,
        /// Include wall-clock time and the convergence trace in the output.
        #[arg(long)]
        timing: bool,
    },
    /// Grid-sampled joint/position table written as CSV plus a metadata sidecar.
    Dataset {
        #[command(flatten)]
        robot: RobotArgs,
        #[arg(long, default_value_t = 100_000)]
        rows: usize,
        /// Uniform joint jitter amplitude (rad).
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a position-to-joints model on a dataset and report held-out metrics.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "tree")]
        kind: ModelKind,
        #[arg(long, default_value_t = 8)]
        degree: usize,
        #[arg(long, default_value_t = TreeConfig::default().max_depth)]
        max_depth: usize,
        #[arg(long, default_value_t = TreeConfig::default().min_leaf)]
        min_leaf: usize,
        #[arg(long, default_value_t = 0.25)]
        test_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved model on fresh workspace targets and optionally on a dataset.
    Evaluate {
        #[command(flatten)]
        robot: RobotArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, value_enum, default_value = "ball")]
        sampler: Sampler,
    },
    /// Vary one hyperparameter over a grid on the spec's target batch.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        algo: SolverId,
        /// Field of the algorithm's config, e.g. `population_size`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Write cells and raw runs as JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every algorithm of a spec on one shared target batch.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for the solves; overrides the spec.
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long, value_enum)]
        sampler: Option<Sampler>,
        #[arg(long)]
        sa_paper_literal: bool,
    },
    /// Print a benchmark report and re-check it against its raw runs.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()?;
    if values.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(values)
}

fn parse_joints(s: &str) -> Result<JointVector, String> {
    JointVector::from_slice(&parse_floats(s, 7)?).map_err(|e| e.to_string())
}

fn parse_position(s: &str) -> Result<Position3, String> {
    let v = parse_floats(s, 3)?;
    Ok(Position3::new(v[0], v[1], v[2]))
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected `<solver>.<field>=<value>`")?;
    let value = v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), value))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidModel(_)
        | Error::InvalidConfig(_)
        | Error::UnknownParameter { .. }
        | Error::Parse { .. }
        | Error::Empty(_)
        | Error::Json(_)
        | Error::Csv(_) => 3,
        Error::MissingModel(_) => 4,
        Error::Io { .. } => 5,
        Error::NonMonotonicTrace { .. } => 1,
    }
}

fn print_json(value: &serde_json::Value) -> ikbench::Result<()> {
    emit!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_tree_model(path: &Path) -> ikbench::Result<ikbench::ml::RegressionTree> {
    TrainedModel::load(path)?.into_tree()
}

fn run(cli: Cli) -> ikbench::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Fk { robot, joints } => {
            let p = robot.model()?.end_effector_position(&joints);
            emit!("{},{},{}", p.x, p.y, p.z);
        }
        Command::Sample { robot, count, sampler } => {
            let sphere = WorkspaceSphere::of(&robot.model()?);
            let mut rng = seeded_rng(seed);
            for _ in 0..count {
                let p = sphere.sample_with(sampler.into(), &mut rng);
                emit!("{},{},{}", p.x, p.y, p.z);
            }
        }
        Command::Solve {
            robot,
            algo,
            target,
            model,
            solver_config,
            overrides,
            tolerance,
            sa_paper_literal,
            timing,
        } => {
            let kin = robot.model()?;
            let mut configs = match &solver_config {
                Some(path) => SolverConfigs::load(path)?,
                None => SolverConfigs::default(),
            };
            for (k, v) in &overrides {
                configs.set(k, *v)?;
            }
            configs.sa.paper_literal |= sa_paper_literal;
            let budget = Budget::with_tolerance(tolerance)?;
            let tree = match (&model, algo) {
                (Some(path), _) => Some(load_tree_model(path)?),
                (None, SolverId::Dtnr) => {
                    return Err(Error::MissingModel("DTNR needs --model <tree file>".into()));
                }
                (None, _) => None,
            };
            let mut rng = seeded_rng(seed);
            let res = solve(algo, &kin, &target, &configs, &budget, tree.as_ref(), &mut rng)?;
            let mut out = json!({
                "algorithm": algo,
                "target": target,
                "joints": res.joints,
                "position": kin.end_effector_position(&res.joints),
                "final_fitness": res.final_fitness,
                "iterations_used": res.iterations_used,
                "converged": res.converged,
            });
            if let Some(b) = res.stage_boundary {
                out["stage_boundary"] = json!(b);
            }
            if timing {
                out["elapsed"] = json!(res.elapsed);
                out["trace"] = json!(res.trace);
            }
            print_json(&out)?;
        }
        Command::Dataset {
            robot,
            rows,
            noise,
            out,
        } => {
            let data = generate_dataset(&robot.model()?, rows, noise, seed)?;
            data.save(&out)?;
            print_json(&json!(data.meta))?;
        }
        Command::Train {
            data,
            kind,
            degree,
            max_depth,
            min_leaf,
            test_fraction,
            out,
        } => {
            let data = Dataset::load(&data)?;
            let kin = KinematicModel::with_links(data.meta.links)?;
            let mut rng = seeded_rng(seed);
            let (train, test) = split_dataset(&data.rows, test_fraction, &mut rng)?;
            let model = match kind {
                ModelKind::Linear => TrainedModel::Linear(fit_linear(&train)?),
                ModelKind::Polynomial => TrainedModel::Polynomial(fit_polynomial(&train, degree)?),
                ModelKind::Tree => TrainedModel::Tree(fit_tree(&train, &TreeConfig { max_depth, min_leaf })?),
            };
            model.save(&out)?;
            let metrics = evaluate(|p| model.predict(p), &test, &kin)?;
            let mut summary = json!({
                "kind": model.kind(),
                "train_rows": train.len(),
                "test_rows": test.len(),
                "test": metrics,
            });
            if let TrainedModel::Tree(t) = &model {
                summary["depth"] = json!(t.depth);
                summary["leaves"] = json!(t.leaf_count());
            }
            print_json(&summary)?;
        }
        Command::Evaluate {
            robot,
            model,
            data,
            samples,
            sampler,
        } => {
            let trained = TrainedModel::load(&model)?;
            let mut kin = robot.model()?;
            let mut out = json!({ "kind": trained.kind() });
            if let Some(path) = &data {
                let data = Dataset::load(path)?;
                kin = KinematicModel::with_links(data.meta.links)?;
                out["dataset"] = json!(evaluate(|p| trained.predict(p), &data.rows, &kin)?);
            }
            let sphere = WorkspaceSphere::of(&kin);
            let mut rng = seeded_rng(seed);
            let targets: Vec<Position3> = (0..samples).map(|_| sphere.sample_with(sampler.into(), &mut rng)).collect();
            out["workspace_samples"] = json!(samples);
            out["workspace_average_fitness"] = json!(average_fitness(|p| trained.predict(p), &targets, &kin)?);
            print_json(&out)?;
        }
        Command::Sweep {
            spec,
            algo,
            param,
            grid,
            repeats,
            out,
        } => {
            let base = spec.parent().unwrap_or(Path::new(".")).to_path_buf();
            let mut spec = BenchmarkSpec::load(&spec)?;
            if let Some(s) = cli.seed {
                spec.master_seed = s;
            }
            let kin = spec.model()?;
            let tree = match (&spec.tree, algo) {
                (Some(source), SolverId::Dtnr) => Some(source.resolve(&kin, &base)?),
                _ => None,
            };
            let result = sweep_parameter(&kin, &spec, &spec.configs, algo, &param, &grid, repeats, tree.as_ref())?;
            let text = serde_json::to_string_pretty(&result)?;
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| ikbench::Error::Io { path, source: e })?,
                None => print_json(&json!({ "solver": result.solver, "parameter": result.parameter, "cells": result.cells }))?,
            }
        }
        Command::Bench {
            spec,
            out,
            parallel,
            sampler,
            sa_paper_literal,
        } => {
            let base = spec.parent().unwrap_or(Path::new(".")).to_path_buf();
            let mut spec = BenchmarkSpec::load(&spec)?;
            if let Some(s) = cli.seed {
                spec.master_seed = s;
            }
            if let Some(p) = parallel {
                spec.parallel = p;
            }
            if let Some(s) = sampler {
                spec.sampler = s.into();
            }
            spec.configs.sa.paper_literal |= sa_paper_literal;
            let kin = spec.model()?;
            let tree = match (&spec.tree, spec.algorithms.contains(&SolverId::Dtnr)) {
                (Some(source), true) => Some(source.resolve(&kin, &base)?),
                (None, true) => {
                    return Err(Error::MissingModel(
                        "DTNR is listed but the spec has no [tree] section".into(),
                    ))
                }
                _ => None,
            };
            let outcome = run_benchmark(&kin, &spec, &spec.configs, tree.as_ref())?;
            export_report(&outcome, &out)?;
            print_table(&outcome.reports);
        }
        Command::Report { dir } => {
            let open = |name: &str| {
                let path = dir.join(name);
                std::fs::File::open(&path).map_err(|e| Error::Io { path, source: e })
            };
            let reports = read_report_csv(open("report.csv")?)?;
            let runs = read_runs_jsonl(open("runs.jsonl")?)?;
            print_table(&reports);
            for r in &reports {
                let mine: Vec<_> = runs.iter().filter(|x| x.algorithm == r.solver).cloned().collect();
                let again = aggregate(r.solver, &mine)?;
                if again != *r {
                    return Err(Error::InvalidConfig(format!(
                        "{} row does not match runs.jsonl",
                        r.solver
                    )));
                }
            }
            emit!("all {} rows agree with runs.jsonl", reports.len());
        }
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"))
}

fn print_table(reports: &[ikbench::bench::AlgorithmReport]) {
    emit!(
        "{:<6}{:>10}{:>11}{:>11}{:>10}{:>10}{:>11}{:>11}{:>10}{:>10}{:>7}",
        "algo", "iters", "best", "worst", "t_best", "t_worst", "avg", "weighted", "sd", "t_avg", "SR"
    );
    for r in reports {
        emit!(
            "{:<6}{:>10.1}{:>11.3e}{:>11.3e}{:>10.4}{:>10.4}{:>11}{:>11}{:>10.3}{:>10.4}{:>7.0}",
            r.solver.name(),
            r.iteration_count,
            r.best_fitness,
            r.worst_fitness,
            r.best_time,
            r.worst_time,
            opt(r.average_fitness),
            opt(r.average_fitness_weighted),
            r.std_dev,
            r.average_time,
            r.success_rate
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
