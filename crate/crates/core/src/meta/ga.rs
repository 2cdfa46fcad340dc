use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3, JOINTS};
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    /// Per-gene mutation probability.
    pub mutation_probability: f64,
    /// Standard deviation (rad) of a Gaussian mutation step; 0 resamples the
    /// gene uniformly within its limits instead.
    pub mutation_scale: f64,
    /// Probability that a child blends its parents rather than copying the first.
    pub crossover_probability: f64,
    /// Blend extension α: child genes are drawn from the parents' interval
    /// widened by α of its width on each side.
    pub blend_alpha: f64,
    /// Best individuals protected from replacement.
    pub elitism_count: usize,
    pub generations: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 30,
            mutation_probability: 0.01,
            mutation_scale: 0.01,
            crossover_probability: 0.9,
            blend_alpha: 1.0,
            elitism_count: 1,
            generations: 400,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        let ok = self.population_size >= 2
            && prob(self.mutation_probability)
            && prob(self.crossover_probability)
            && self.mutation_scale >= 0.0
            && self.blend_alpha >= 0.0
            && self.elitism_count < self.population_size
            && self.generations >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::config("genetic algorithm parameters out of range"))
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Individual {
    genes: JointVector,
    fitness: f64,
}

/// Binary tournament: the fitter of two uniformly drawn individuals.
fn tournament<'p, R: Rng + ?Sized>(population: &'p [Individual], rng: &mut R) -> &'p Individual {
    let a = &population[rng.random_range(0..population.len())];
    let b = &population[rng.random_range(0..population.len())];
    if b.fitness < a.fitness {
        b
    } else {
        a
    }
}

/// One child: per-gene blend crossover followed by per-gene resample mutation.
pub fn breed<R: Rng + ?Sized>(
    model: &KinematicModel,
    first: &JointVector,
    second: &JointVector,
    config: &GaConfig,
    rng: &mut R,
) -> JointVector {
    let mut child = *first;
    if rng.random::<f64>() < config.crossover_probability {
        let gap = model.joint_delta(second, first);
        for j in 0..JOINTS {
            let (lo, hi) = (first[j] + gap[j].min(0.0), first[j] + gap[j].max(0.0));
            let spread = (hi - lo) * config.blend_alpha;
            child[j] = if hi - lo > 0.0 {
                rng.random_range(lo - spread..=hi + spread)
            } else {
                lo
            };
        }
    }
    let limits = model.joint_limits();
    for j in 0..JOINTS {
        if rng.random::<f64>() < config.mutation_probability {
            child[j] = if config.mutation_scale > 0.0 {
                let step: f64 = StandardNormal.sample(rng);
                child[j] + config.mutation_scale * step
            } else {
                rng.random_range(limits[j].lower..=limits[j].upper)
            };
        }
    }
    model.normalize(&child)
}

/// Steady-state genetic algorithm: each generation breeds a full brood by
/// tournament selection and the best children replace the worst
/// non-elite members they beat.
pub fn solve_ga<R: Rng + ?Sized>(
    model: &KinematicModel,
    target: &Position3,
    config: &GaConfig,
    budget: &Budget,
    rng: &mut R,
) -> SolveResult {
    let mut population: Vec<Individual> = (0..config.population_size)
        .map(|_| {
            let genes = model.random_joints(rng);
            Individual {
                genes,
                fitness: model.fitness(&genes, target),
            }
        })
        .collect();
    sort(&mut population);
    let mut progress = Progress::new(
        model,
        *target,
        budget,
        config.generations,
        population[0].genes,
        population[0].fitness,
    );
    let mut generation = 0;

    while !progress.done(generation) {
        let mut brood: Vec<Individual> = (0..config.population_size)
            .map(|_| {
                let first = tournament(&population, rng).genes;
                let second = tournament(&population, rng).genes;
                let genes = breed(model, &first, &second, config, rng);
                Individual {
                    genes,
                    fitness: model.fitness(&genes, target),
                }
            })
            .collect();
        sort(&mut brood);

        // worst-first slots that may be overwritten
        let mut slot = population.len();
        for child in brood {
            if slot <= config.elitism_count || child.fitness >= population[slot - 1].fitness {
                break;
            }
            slot -= 1;
            population[slot] = child;
        }
        sort(&mut population);
        progress.offer(&population[0].genes, population[0].fitness);
        generation += 1;
        progress.checkpoint(generation);
    }
    progress.finish(generation)
}

fn sort(population: &mut [Individual]) {
    population.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
}
