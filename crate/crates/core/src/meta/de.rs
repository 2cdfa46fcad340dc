use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3, JOINTS};
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeConfig {
    pub population_size: usize,
    /// Standard deviation (rad) of the Gaussian noise added to each mutant gene.
    pub mutation_probability: f64,
    pub differential_weight: f64,
    pub crossover_rate: f64,
    pub generations: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population_size: 20,
            mutation_probability: 0.001,
            differential_weight: 0.5,
            crossover_rate: 0.9,
            generations: 400,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.population_size >= 4
            && self.mutation_probability >= 0.0
            && self.differential_weight >= 0.0
            && (0.0..=1.0).contains(&self.crossover_rate)
            && self.generations >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::config("differential evolution parameters out of range"))
        }
    }
}

/// `base + F·difference + noise`, where `difference` is `x_b − x_c`.
pub fn de_mutant<R: Rng + ?Sized>(
    base: &JointVector,
    difference: &JointVector,
    weight: f64,
    noise_sigma: f64,
    rng: &mut R,
) -> JointVector {
    let noise = Normal::new(0.0, noise_sigma.max(0.0)).expect("sigma is finite and non-negative");
    let mut v = *base;
    for j in 0..JOINTS {
        v[j] += weight * difference[j];
        if noise_sigma > 0.0 {
            v[j] += noise.sample(rng);
        }
    }
    v
}

/// Three distinct indices, all different from `exclude`.
fn pick_three<R: Rng + ?Sized>(n: usize, exclude: usize, rng: &mut R) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    let mut k = 0;
    while k < 3 {
        let i = rng.random_range(0..n);
        if i != exclude && !picked[..k].contains(&i) {
            picked[k] = i;
            k += 1;
        }
    }
    picked
}

/// DE/rand/1/bin with greedy one-to-one selection.
pub fn solve_de<R: Rng + ?Sized>(
    model: &KinematicModel,
    target: &Position3,
    config: &DeConfig,
    budget: &Budget,
    rng: &mut R,
) -> SolveResult {
    let n = config.population_size;
    let mut members: Vec<JointVector> = (0..n).map(|_| model.random_joints(rng)).collect();
    let mut scores: Vec<f64> = members.iter().map(|q| model.fitness(q, target)).collect();
    let best = argmin(&scores);
    let mut progress = Progress::new(model, *target, budget, config.generations, members[best], scores[best]);
    let mut generation = 0;

    while !progress.done(generation) {
        for i in 0..n {
            let [a, b, c] = pick_three(n, i, rng);
            let mutant = de_mutant(
                &members[a],
                &model.joint_delta(&members[b], &members[c]),
                config.differential_weight,
                config.mutation_probability,
                rng,
            );
            let forced = rng.random_range(0..JOINTS);
            let mut trial = members[i];
            for j in 0..JOINTS {
                if j == forced || rng.random::<f64>() < config.crossover_rate {
                    trial[j] = mutant[j];
                }
            }
            let trial = model.normalize(&trial);
            let score = model.fitness(&trial, target);
            if score <= scores[i] {
                members[i] = trial;
                scores[i] = score;
                progress.offer(&trial, score);
            }
        }
        generation += 1;
        progress.checkpoint(generation);
    }
    progress.finish(generation)
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
