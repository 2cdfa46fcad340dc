use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{KinematicModel, Position3, JOINTS};
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    pub t_max: f64,
    pub t_min: f64,
    pub cooling_rate: f64,
    /// Non-improving proposals that end a temperature level.
    pub max_stay_counter: usize,
    /// Half-width of the per-joint proposal at `t_max` (rad).
    pub neighborhood_scale: f64,
    /// Half-width at `t_min`; the width is interpolated geometrically in log-temperature.
    pub min_neighborhood_scale: f64,
    /// Accept worsening moves with `exp(+ΔE/T)` instead of `exp(−ΔE/T)`.
    pub paper_literal: bool,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            t_max: 100.0,
            t_min: 1e-50,
            cooling_rate: 0.7,
            max_stay_counter: 20,
            neighborhood_scale: 1.0,
            min_neighborhood_scale: 1e-7,
            paper_literal: false,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.t_min > 0.0
            && self.t_max > self.t_min
            && self.cooling_rate > 0.0
            && self.cooling_rate < 1.0
            && self.max_stay_counter >= 1
            && self.neighborhood_scale > 0.0
            && self.min_neighborhood_scale > 0.0
            && self.min_neighborhood_scale <= self.neighborhood_scale;
        if ok {
            Ok(())
        } else {
            Err(Error::config("simulated annealing parameters out of range"))
        }
    }

    /// `t_max, t_max·cr, t_max·cr², …` while above `t_min`.
    pub fn temperatures(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::successors(Some(self.t_max), move |t| Some(t * self.cooling_rate))
            .take_while(move |t| *t > self.t_min)
    }

    /// Number of temperature levels in a full schedule.
    pub fn levels(&self) -> usize {
        self.temperatures().count()
    }

    fn neighborhood(&self, temperature: f64) -> f64 {
        let span = (self.t_max / self.t_min).ln();
        let progress = ((self.t_max / temperature).ln() / span).clamp(0.0, 1.0);
        self.neighborhood_scale * (self.min_neighborhood_scale / self.neighborhood_scale).powf(progress)
    }
}

/// Probability of accepting a move that changes the energy by `delta` at
/// `temperature`.
pub fn acceptance_probability(delta: f64, temperature: f64, paper_literal: bool) -> f64 {
    if delta < 0.0 {
        return 1.0;
    }
    let exponent = if paper_literal { delta / temperature } else { -delta / temperature };
    exponent.exp().min(1.0)
}

/// Metropolis test against a fresh uniform draw.
pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, temperature: f64, paper_literal: bool, rng: &mut R) -> bool {
    delta < 0.0 || rng.random::<f64>() < acceptance_probability(delta, temperature, paper_literal)
}

/// Simulated annealing from a random start. Each temperature level sweeps
/// the joints with single-joint proposals until `max_stay_counter`
/// consecutive proposals fail to improve the best, then cools geometrically.
/// One level is one iteration.
pub fn solve_sa<R: Rng + ?Sized>(
    model: &KinematicModel,
    target: &Position3,
    config: &SaConfig,
    budget: &Budget,
    rng: &mut R,
) -> SolveResult {
    let mut q = model.random_joints(rng);
    let mut energy = model.fitness(&q, target);
    let mut progress = Progress::new(model, *target, budget, usize::MAX, q, energy);
    let mut level = 0;

    for temperature in config.temperatures() {
        if progress.done(level) {
            break;
        }
        let width = config.neighborhood(temperature);
        let mut stay = 0;
        'level: for _sweep in 0..config.max_stay_counter {
            for joint in 0..JOINTS {
                let mut candidate = q;
                candidate[joint] += rng.random_range(-width..=width);
                let candidate = model.normalize(&candidate);
                let e_new = progress.fitness(&candidate);
                if metropolis_accept(e_new - energy, temperature, config.paper_literal, rng) {
                    q = candidate;
                    energy = e_new;
                }
                if progress.offer(&candidate, e_new) {
                    stay = 0;
                } else {
                    stay += 1;
                }
                if stay >= config.max_stay_counter || progress.converged() {
                    break 'level;
                }
            }
        }
        level += 1;
        progress.checkpoint(level);
    }
    progress.finish(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn geometric_schedule() {
        let cfg = SaConfig {
            cooling_rate: 0.5,
            ..Default::default()
        };
        let temps: Vec<f64> = cfg.temperatures().take(4).collect();
        assert_eq!(temps, vec![100.0, 50.0, 25.0, 12.5]);
        assert!(cfg.temperatures().all(|t| t > cfg.t_min));
    }

    #[test]
    fn equal_energy_is_always_accepted() {
        assert_eq!(acceptance_probability(0.0, 3.0, false), 1.0);
        assert_eq!(acceptance_probability(-1.0, 3.0, false), 1.0);
        assert!((acceptance_probability(2.0, 1.0, false) - (-2.0f64).exp()).abs() < 1e-15);
        // the printed sign accepts every worsening move
        assert_eq!(acceptance_probability(2.0, 1.0, true), 1.0);
    }

    #[test]
    fn neighborhood_spans_configured_range() {
        let cfg = SaConfig::default();
        assert!((cfg.neighborhood(cfg.t_max) - cfg.neighborhood_scale).abs() < 1e-12);
        assert!((cfg.neighborhood(cfg.t_min) / cfg.min_neighborhood_scale - 1.0).abs() < 1e-9);
    }

    #[test]
    fn best_is_monotone_and_deterministic() {
        let model = KinematicModel::lbr_iiwa_r800();
        let target = Position3::new(250.0, 100.0, 600.0);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            solve_sa(&model, &target, &SaConfig::default(), &Budget::default(), &mut rng)
        };
        let a = run();
        let b = run();
        assert!(a.same_outcome(&b));
        let s = a.trace.samples();
        assert!(s.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness));
        assert!(a.final_fitness < 1.0, "{}", a.final_fitness);
    }
}
