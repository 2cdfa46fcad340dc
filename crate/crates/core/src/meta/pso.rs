use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3, JOINTS};
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub num_particles: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub max_iterations: usize,
    /// Initial velocities are uniform in ±this fraction of each joint range.
    pub initial_velocity_fraction: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            num_particles: 20,
            inertia: 0.7298,
            cognitive: 1.49618,
            social: 1.49618,
            max_iterations: 1000,
            initial_velocity_fraction: 0.1,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.num_particles >= 1
            && self.inertia >= 0.0
            && self.cognitive >= 0.0
            && self.social >= 0.0
            && self.max_iterations >= 1
            && self.initial_velocity_fraction >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config("particle swarm parameters out of range"))
        }
    }
}

/// `v ← w·v + c₁·r₁·(pbest − q) + c₂·r₂·(gbest − q)` per dimension, given
/// the offsets `pbest − q` and `gbest − q`.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(
    velocity: &JointVector,
    to_pbest: &JointVector,
    to_gbest: &JointVector,
    inertia: f64,
    cognitive: f64,
    social: f64,
    r1: &[f64; JOINTS],
    r2: &[f64; JOINTS],
) -> JointVector {
    let mut v = JointVector::ZERO;
    for j in 0..JOINTS {
        v[j] = inertia * velocity[j]
            + cognitive * r1[j] * to_pbest[j]
            + social * r2[j] * to_gbest[j];
    }
    v
}

struct Particle {
    position: JointVector,
    velocity: JointVector,
    best: JointVector,
    best_fitness: f64,
}

/// Global-best particle swarm; positions are wrapped into the joint limits
/// after every move and offsets on circular joints go the short way round.
pub fn solve_pso<R: Rng + ?Sized>(
    model: &KinematicModel,
    target: &Position3,
    config: &PsoConfig,
    budget: &Budget,
    rng: &mut R,
) -> SolveResult {
    let limits = model.joint_limits();
    let mut swarm: Vec<Particle> = (0..config.num_particles)
        .map(|_| {
            let position = model.random_joints(rng);
            let mut velocity = JointVector::ZERO;
            for j in 0..JOINTS {
                let vmax = config.initial_velocity_fraction * limits[j].width();
                if vmax > 0.0 {
                    velocity[j] = rng.random_range(-vmax..=vmax);
                }
            }
            let fitness = model.fitness(&position, target);
            Particle {
                position,
                velocity,
                best: position,
                best_fitness: fitness,
            }
        })
        .collect();
    let leader = swarm
        .iter()
        .min_by(|a, b| a.best_fitness.total_cmp(&b.best_fitness))
        .expect("at least one particle");
    let mut gbest = leader.best;
    let mut gbest_fitness = leader.best_fitness;
    let mut progress = Progress::new(model, *target, budget, config.max_iterations, gbest, gbest_fitness);
    let mut iteration = 0;

    while !progress.done(iteration) {
        for particle in swarm.iter_mut() {
            let r1: [f64; JOINTS] = std::array::from_fn(|_| rng.random());
            let r2: [f64; JOINTS] = std::array::from_fn(|_| rng.random());
            particle.velocity = velocity_update(
                &particle.velocity,
                &model.joint_delta(&particle.best, &particle.position),
                &model.joint_delta(&gbest, &particle.position),
                config.inertia,
                config.cognitive,
                config.social,
                &r1,
                &r2,
            );
            let mut moved = particle.position;
            for j in 0..JOINTS {
                moved[j] += particle.velocity[j];
            }
            particle.position = model.normalize(&moved);
            let fitness = model.fitness(&particle.position, target);
            if fitness < particle.best_fitness {
                particle.best = particle.position;
                particle.best_fitness = fitness;
            }
            if fitness < gbest_fitness {
                gbest = particle.position;
                gbest_fitness = fitness;
            }
        }
        progress.offer(&gbest, gbest_fitness);
        iteration += 1;
        progress.checkpoint(iteration);
    }
    progress.finish(iteration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn no_attraction_keeps_velocity() {
        let v = JointVector::new([0.1, -0.2, 0.3, 0.0, 0.5, -0.6, 0.7]);
        let d = JointVector::new([-2.0; JOINTS]);
        let r = [0.5; JOINTS];
        assert_eq!(velocity_update(&v, &d, &d, 1.0, 0.0, 0.0, &r, &r), v);
    }

    #[test]
    fn at_both_bests_only_inertia_remains() {
        let v = JointVector::new([0.4; JOINTS]);
        let r = [0.9; JOINTS];
        let out = velocity_update(&v, &JointVector::ZERO, &JointVector::ZERO, 0.7, 1.5, 1.5, &r, &r);
        assert!(out.iter().all(|x| (x - 0.28).abs() < 1e-15));
    }

    #[test]
    fn gbest_is_monotone() {
        let model = KinematicModel::lbr_iiwa_r800();
        let target = Position3::new(-100.0, -450.0, 300.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let res = solve_pso(&model, &target, &PsoConfig::default(), &Budget::default(), &mut rng);
        let s = res.trace.samples();
        assert!(s.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness));
        assert!(model.within_limits(&res.joints));
    }
}
