use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3, JOINTS};
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AfsaConfig {
    pub population_size: usize,
    /// Per-iteration shrink factor applied to the visual range.
    pub exploration_q: f64,
    /// Prey attempts before falling back to a random move.
    pub max_attempt_size: usize,
    /// Initial visual range (rad, joint-space Euclidean norm).
    pub visual_range: f64,
    /// A fish only swarms or follows when fewer than this fraction of the
    /// school is within sight.
    pub crowding_factor: f64,
    pub max_iterations: usize,
}

impl Default for AfsaConfig {
    fn default() -> Self {
        AfsaConfig {
            population_size: 1,
            exploration_q: 0.971,
            max_attempt_size: 4,
            visual_range: 0.6,
            crowding_factor: 0.618,
            max_iterations: 500,
        }
    }
}

impl AfsaConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.population_size >= 1
            && self.exploration_q > 0.0
            && self.exploration_q < 1.0
            && self.max_attempt_size >= 1
            && self.visual_range > 0.0
            && self.crowding_factor > 0.0
            && self.max_iterations >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::config("fish swarm parameters out of range"))
        }
    }
}

/// A uniformly distributed offset inside the joint-space ball of radius `visual`.
pub fn random_step<R: Rng + ?Sized>(visual: f64, rng: &mut R) -> JointVector {
    let mut dir = JointVector::ZERO;
    let mut norm = 0.0;
    while norm < 1e-12 {
        for j in 0..JOINTS {
            dir[j] = StandardNormal.sample(rng);
        }
        norm = distance(&dir, &JointVector::ZERO);
    }
    let radius = visual * rng.random::<f64>().powf(1.0 / JOINTS as f64);
    JointVector(dir.0.map(|v| v * radius / norm))
}

fn distance(a: &JointVector, b: &JointVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn offset(q: &JointVector, step: &JointVector) -> JointVector {
    let mut out = *q;
    for j in 0..JOINTS {
        out[j] += step[j];
    }
    out
}

#[derive(Clone, Copy)]
struct Fish {
    position: JointVector,
    fitness: f64,
}

/// Artificial fish swarm. Each fish tries swarming towards the centroid of
/// its visible neighbours and following the best of them (both only when
/// the neighbourhood is not crowded and the destination is fitter); failing
/// that it preys for up to `max_attempt_size` random points in sight and
/// finally takes a random step. The visual range shrinks by
/// `exploration_q` every iteration.
pub fn solve_afsa<R: Rng + ?Sized>(
    model: &KinematicModel,
    target: &Position3,
    config: &AfsaConfig,
    budget: &Budget,
    rng: &mut R,
) -> SolveResult {
    let mut school: Vec<Fish> = (0..config.population_size)
        .map(|_| {
            let position = model.random_joints(rng);
            Fish {
                position,
                fitness: model.fitness(&position, target),
            }
        })
        .collect();
    let first = *school
        .iter()
        .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
        .expect("population is at least one");
    let mut progress = Progress::new(model, *target, budget, config.max_iterations, first.position, first.fitness);
    let mut visual = config.visual_range;
    let mut iteration = 0;
    let evaluate = |q: JointVector| {
        let position = model.normalize(&q);
        Fish {
            position,
            fitness: model.fitness(&position, target),
        }
    };

    while !progress.done(iteration) {
        for i in 0..school.len() {
            let me = school[i];
            let neighbours: Vec<Fish> = school
                .iter()
                .enumerate()
                .filter(|&(k, f)| k != i && distance(&f.position, &me.position) <= visual)
                .map(|(_, f)| *f)
                .collect();
            let uncrowded = !neighbours.is_empty()
                && (neighbours.len() as f64) / (school.len() as f64) < config.crowding_factor;

            let mut social: Option<Fish> = None;
            if uncrowded {
                let mut centroid = JointVector::ZERO;
                for f in &neighbours {
                    for j in 0..JOINTS {
                        centroid[j] += f.position[j] / neighbours.len() as f64;
                    }
                }
                let swarm = evaluate(centroid);
                let leader = neighbours
                    .iter()
                    .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
                    .copied()
                    .expect("non-empty");
                for candidate in [swarm, leader] {
                    if candidate.fitness < me.fitness
                        && social.is_none_or(|s| candidate.fitness < s.fitness)
                    {
                        social = Some(candidate);
                    }
                }
            }

            let next = social.unwrap_or_else(|| {
                for _ in 0..config.max_attempt_size {
                    let candidate = evaluate(offset(&me.position, &random_step(visual, rng)));
                    if candidate.fitness < me.fitness {
                        return candidate;
                    }
                }
                evaluate(offset(&me.position, &random_step(visual, rng)))
            });
            progress.offer(&next.position, next.fitness);
            school[i] = next;
        }
        visual *= config.exploration_q;
        iteration += 1;
        progress.checkpoint(iteration);
    }
    progress.finish(iteration)
}
