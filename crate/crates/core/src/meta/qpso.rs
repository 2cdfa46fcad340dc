use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3, JOINTS};
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpsoConfig {
    pub num_particles: usize,
    /// Contraction-expansion coefficient at the first iteration.
    pub beta_start: f64,
    /// Coefficient at the last iteration; linear in between.
    pub beta_end: f64,
    pub max_iterations: usize,
}

impl Default for QpsoConfig {
    fn default() -> Self {
        QpsoConfig {
            num_particles: 20,
            beta_start: 1.0,
            beta_end: 0.5,
            max_iterations: 500,
        }
    }
}

impl QpsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_particles < 2 || self.max_iterations < 1 || !(self.beta_start > 0.0 && self.beta_end > 0.0) {
            return Err(Error::config("qpso needs at least two particles and positive beta"));
        }
        Ok(())
    }

    pub fn beta(&self, iteration: usize) -> f64 {
        let span = self.max_iterations.saturating_sub(1).max(1) as f64;
        let t = (iteration as f64 / span).min(1.0);
        self.beta_start + (self.beta_end - self.beta_start) * t
    }
}

/// Mean of the personal bests.
pub fn mean_best(pbests: &[JointVector]) -> JointVector {
    let mut m = JointVector::ZERO;
    for p in pbests {
        for j in 0..JOINTS {
            m[j] += p[j];
        }
    }
    let n = pbests.len() as f64;
    JointVector(m.0.map(|v| v / n))
}

/// One coordinate of the quantum-behaved move:
/// `attractor ± β·|mbest − x|·ln(1/u)`.
pub fn qpso_coordinate(attractor: f64, mbest: f64, x: f64, beta: f64, u: f64, positive: bool) -> f64 {
    let spread = beta * (mbest - x).abs() * (1.0 / u).ln();
    if positive {
        attractor + spread
    } else {
        attractor - spread
    }
}

/// Quantum-behaved particle swarm (no velocity state).
pub fn solve_qpso<R: Rng + ?Sized>(
    model: &KinematicModel,
    target: &Position3,
    config: &QpsoConfig,
    budget: &Budget,
    rng: &mut R,
) -> SolveResult {
    let mut positions: Vec<JointVector> = (0..config.num_particles).map(|_| model.random_joints(rng)).collect();
    let mut pbests = positions.clone();
    let mut pbest_fitness: Vec<f64> = positions.iter().map(|q| model.fitness(q, target)).collect();
    let mut leader = argmin(&pbest_fitness);
    let mut progress = Progress::new(
        model,
        *target,
        budget,
        config.max_iterations,
        pbests[leader],
        pbest_fitness[leader],
    );
    let mut iteration = 0;

    while !progress.done(iteration) {
        let beta = config.beta(iteration);
        let gbest = pbests[leader];
        let offsets: Vec<JointVector> = pbests.iter().map(|p| model.joint_delta(p, &gbest)).collect();
        let mbest_offset = mean_best(&offsets);
        for i in 0..positions.len() {
            // work in coordinates centred on the leader so circular joints
            // never straddle the ±π seam
            let x = model.joint_delta(&positions[i], &gbest);
            let mut next = positions[i];
            for j in 0..JOINTS {
                let phi: f64 = rng.random();
                let attractor = phi * offsets[i][j];
                // u in (0, 1] keeps ln(1/u) finite
                let u = 1.0 - rng.random::<f64>();
                next[j] = gbest[j] + qpso_coordinate(attractor, mbest_offset[j], x[j], beta, u, rng.random());
            }
            positions[i] = model.normalize(&next);
            let fitness = model.fitness(&positions[i], target);
            if fitness < pbest_fitness[i] {
                pbests[i] = positions[i];
                pbest_fitness[i] = fitness;
            }
        }
        leader = argmin(&pbest_fitness);
        progress.offer(&pbests[leader], pbest_fitness[leader]);
        iteration += 1;
        progress.checkpoint(iteration);
    }
    progress.finish(iteration)
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
