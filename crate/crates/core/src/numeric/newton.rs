use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3, JOINTS};
use crate::numeric::pseudo_inverse;
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    pub max_iterations: usize,
    /// λ of the damped inverse; 0 selects the plain SVD pseudo-inverse.
    pub damping: f64,
    pub step_scale: f64,
    /// Consecutive fitness increases that abort the run.
    pub divergence_limit: usize,
    /// An iteration that improves the fitness by less than this (mm) ends the run.
    pub stall_tolerance: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iterations: 30,
            damping: 0.0,
            step_scale: 1.0,
            divergence_limit: 5,
            stall_tolerance: 1e-6,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping >= 0.0) {
            return Err(Error::config("newton damping must be non-negative"));
        }
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return Err(Error::config("newton step_scale must lie in (0, 1]"));
        }
        if !(self.stall_tolerance >= 0.0) {
            return Err(Error::config("newton stall_tolerance must be non-negative"));
        }
        if self.max_iterations < 1 || self.divergence_limit < 1 {
            return Err(Error::config(
                "newton max_iterations and divergence_limit must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Newton-Raphson on the position residual with a pseudo-inverse Jacobian,
/// `θ ← θ − s·J⁺(p(θ) − target)`, starting from `seed`.
pub fn solve_newton_raphson(
    model: &KinematicModel,
    target: &Position3,
    seed: &JointVector,
    config: &NewtonConfig,
    budget: &Budget,
) -> SolveResult {
    let start = model.normalize(seed);
    let mut progress = Progress::new(
        model,
        *target,
        budget,
        config.max_iterations,
        start,
        model.fitness(&start, target),
    );
    let used = newton_stage(&mut progress, start, JOINTS, config, 0);
    progress.finish(used)
}

/// Runs Newton updates on the first `active` joints, leaving the rest
/// untouched. Iterations are numbered from `first_iteration + 1`; returns the
/// number of updates performed.
pub(crate) fn newton_stage(
    progress: &mut Progress<'_>,
    start: JointVector,
    active: usize,
    config: &NewtonConfig,
    first_iteration: usize,
) -> usize {
    let model = progress.model();
    let target = progress.target();
    let mut q = start;
    let mut current = progress.fitness(&q);
    let mut increases = 0;
    let mut used = 0;

    while !progress.done(used) {
        let p = model.end_effector_position(&q);
        let residual = DVector::from_row_slice(&(p - target).as_array());
        let jac = model.position_jacobian(&q);
        let sub = DMatrix::from_fn(3, active, |r, c| jac[(r, c)]);
        let step = pseudo_inverse(&sub, config.damping) * residual;

        let mut next = q;
        for (j, delta) in step.iter().enumerate() {
            next[j] -= config.step_scale * delta;
        }
        if !next.is_finite() {
            break;
        }
        let next = model.normalize(&next);
        let fitness = progress.fitness(&next);
        used += 1;
        progress.offer(&next, fitness);
        progress.checkpoint(first_iteration + used);

        increases = if fitness > current { increases + 1 } else { 0 };
        let stalled = (0.0..config.stall_tolerance).contains(&(current - fitness));
        q = next;
        current = fitness;
        if increases >= config.divergence_limit || stalled {
            break;
        }
    }
    used
}
