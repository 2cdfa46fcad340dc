//! Checks shared by the property tests and the acceptance runner.
#![allow(dead_code)]

use std::sync::OnceLock;

use ikbench::algorithms::{solve, SolverConfigs};
use ikbench::kinematics::{JointVector, KinematicModel, Position3};
use ikbench::meta::metropolis_accept;
use ikbench::ml::{fit_tree, generate_dataset, RegressionTree, TreeConfig};
use ikbench::seeded_rng;
use ikbench::solver::{Budget, SolveResult, SolverId};
use ikbench::workspace::{SamplerKind, WorkspaceSphere};

/// Small tree on the iiwa arm, built once per process.
pub fn small_tree() -> &'static RegressionTree {
    static TREE: OnceLock<RegressionTree> = OnceLock::new();
    TREE.get_or_init(|| {
        let rows = generate_dataset(&KinematicModel::lbr_iiwa_r800(), 4000, 0.1, 11).unwrap().rows;
        fit_tree(&rows, &TreeConfig::default()).unwrap()
    })
}

/// Cheaper caps so hundreds of property cases stay fast.
pub fn quick_configs() -> SolverConfigs {
    let mut c = SolverConfigs::default();
    c.nm.max_iterations = 200;
    c.pso.max_iterations = 60;
    c.qpso.max_iterations = 60;
    c.afsa.max_iterations = 60;
    c.ga.generations = 40;
    c.de.generations = 40;
    c.sa.t_min = c.sa.t_max * c.sa.cooling_rate.powi(20);
    c
}

pub fn run_solver(id: SolverId, target: &Position3, seed: u64, configs: &SolverConfigs) -> SolveResult {
    let model = KinematicModel::lbr_iiwa_r800();
    let mut rng = seeded_rng(seed);
    solve(id, &model, target, configs, &Budget::default(), Some(small_tree()), &mut rng).unwrap()
}

/// Trace iterations strictly increase, fitness never rises, and the last
/// sample is the reported fitness.
pub fn trace_is_monotone(res: &SolveResult) -> Result<(), String> {
    let s = res.trace.samples();
    if s.is_empty() {
        return Err("empty trace".into());
    }
    for w in s.windows(2) {
        if w[1].iteration <= w[0].iteration {
            return Err(format!("iteration {} follows {}", w[1].iteration, w[0].iteration));
        }
        if w[1].best_fitness > w[0].best_fitness {
            return Err(format!("fitness rose at iteration {}", w[1].iteration));
        }
    }
    let last = s.last().unwrap().best_fitness;
    if last.to_bits() != res.final_fitness.to_bits() {
        return Err(format!("trace ends at {last}, result reports {}", res.final_fitness));
    }
    Ok(())
}

/// Result joints lie within the limits and reproduce the reported fitness.
pub fn result_is_consistent(res: &SolveResult, target: &Position3) -> Result<(), String> {
    let model = KinematicModel::lbr_iiwa_r800();
    if !model.within_limits(&res.joints) {
        return Err(format!("joints {:?} outside limits", res.joints));
    }
    let f = model.fitness(&res.joints, target);
    if (f - res.final_fitness).abs() > 1e-9 * (1.0 + f) {
        return Err(format!("fitness {} but FK gives {f}", res.final_fitness));
    }
    Ok(())
}

pub fn deterministic(id: SolverId, target: &Position3, seed: u64, configs: &SolverConfigs) -> Result<(), String> {
    let a = run_solver(id, target, seed, configs);
    let b = run_solver(id, target, seed, configs);
    if a.same_outcome(&b) && a.joints.0.map(f64::to_bits) == b.joints.0.map(f64::to_bits) {
        Ok(())
    } else {
        Err(format!("{id} differs between two runs with seed {seed}"))
    }
}

/// Largest gap between the empirical radial CDF and `(r/R)³` on a 100-point
/// grid, plus the chi-square statistic over 10 equal-volume shells.
pub fn radial_statistics(samples: usize, seed: u64) -> (f64, f64) {
    let model = KinematicModel::lbr_iiwa_r800();
    let sphere = WorkspaceSphere::of(&model);
    let mut rng = seeded_rng(seed);
    let mut radii: Vec<f64> = (0..samples)
        .map(|_| sphere.sample_with(SamplerKind::Ball, &mut rng).distance(&sphere.center()) / sphere.radius)
        .collect();
    radii.sort_by(f64::total_cmp);
    let n = samples as f64;
    let mut ks: f64 = 0.0;
    for k in 1..=100 {
        let r = k as f64 / 100.0;
        let below = radii.partition_point(|&x| x <= r) as f64 / n;
        ks = ks.max((below - r.powi(3)).abs());
    }
    let mut counts = [0usize; 10];
    for &r in &radii {
        // shell k holds (r/R)³ in [k/10, (k+1)/10)
        counts[((r.powi(3) * 10.0) as usize).min(9)] += 1;
    }
    let expected = n / 10.0;
    let chi2 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    (ks, chi2)
}

/// χ² critical value for 9 degrees of freedom at significance 0.001.
pub const CHI2_9_CRIT_0001: f64 = 27.877;

pub fn metropolis_frequency(temperature: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed);
    let delta = temperature * std::f64::consts::LN_2;
    let accepted = (0..trials).filter(|_| metropolis_accept(delta, temperature, false, &mut rng)).count();
    accepted as f64 / trials as f64
}

/// Max-abs gap between the analytic Jacobian and central differences.
pub fn jacobian_gap(model: &KinematicModel, q: &JointVector) -> f64 {
    let jac = model.position_jacobian(q);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for j in 0..7 {
        let mut plus = *q;
        let mut minus = *q;
        plus[j] += h;
        minus[j] -= h;
        let a = model.end_effector_position(&plus).as_array();
        let b = model.end_effector_position(&minus).as_array();
        for r in 0..3 {
            worst = worst.max((jac[(r, j)] - (a[r] - b[r]) / (2.0 * h)).abs());
        }
    }
    worst
}
