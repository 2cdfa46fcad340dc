use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3};
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NelderMeadConfig {
    pub max_iterations: usize,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Offset of each initial vertex from the seed along one axis (rad).
    pub initial_simplex_scale: f64,
    /// Simplex volume relative to the initial one below which the run restarts.
    pub degenerate_volume: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            max_iterations: 799,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_simplex_scale: 0.5,
            degenerate_volume: 1e-30,
        }
    }
}

impl NelderMeadConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.reflection > 0.0
            && self.expansion > 1.0
            && self.expansion > self.reflection
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial_simplex_scale > 0.0
            && self.degenerate_volume >= 0.0
            && self.max_iterations >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::config("nelder-mead coefficients out of range"))
        }
    }
}

/// Which move a simplex step made.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplexMove {
    Reflect,
    Expand,
    ContractOutside,
    ContractInside,
    Shrink,
}

/// A Nelder-Mead simplex over `n` free variables, kept sorted best-first.
#[derive(Clone, Debug)]
pub struct Simplex {
    vertices: Vec<Vec<f64>>,
    values: Vec<f64>,
    initial_volume: f64,
}

impl Simplex {
    /// Builds `n + 1` vertices: `x0` and `x0 + scale·eᵢ`.
    pub fn new<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], scale: f64) -> Self {
        let mut vertices = vec![x0.to_vec()];
        for i in 0..x0.len() {
            let mut v = x0.to_vec();
            v[i] += scale;
            vertices.push(v);
        }
        let values = vertices.iter().map(|v| f(v)).collect();
        let mut simplex = Simplex {
            vertices,
            values,
            initial_volume: 1.0,
        };
        simplex.sort();
        simplex.initial_volume = simplex.volume();
        simplex
    }

    fn sort(&mut self) {
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.vertices = order.iter().map(|&i| self.vertices[i].clone()).collect();
        self.values = order.iter().map(|&i| self.values[i]).collect();
    }

    pub fn best(&self) -> (&[f64], f64) {
        (&self.vertices[0], self.values[0])
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// |det(v₁ − v₀, …, vₙ − v₀)| / n!
    pub fn volume(&self) -> f64 {
        let n = self.dim();
        let base = &self.vertices[0];
        let m = nalgebra::DMatrix::from_fn(n, n, |r, c| self.vertices[c + 1][r] - base[r]);
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        m.determinant().abs() / factorial
    }

    pub fn relative_volume(&self) -> f64 {
        if self.initial_volume > 0.0 {
            self.volume() / self.initial_volume
        } else {
            0.0
        }
    }

    /// One reflect / expand / contract / shrink step.
    pub fn step<F: FnMut(&[f64]) -> f64>(&mut self, f: &mut F, cfg: &NelderMeadConfig) -> SimplexMove {
        let n = self.dim();
        let worst = n;
        let centroid: Vec<f64> = (0..n)
            .map(|k| self.vertices[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(cfg.reflection, &self.vertices[worst]);
        let f_r = f(&reflected);
        let mv = if f_r < self.values[0] {
            let expanded = along(cfg.reflection * cfg.expansion, &self.vertices[worst]);
            let f_e = f(&expanded);
            if f_e < f_r {
                self.replace(worst, expanded, f_e);
                SimplexMove::Expand
            } else {
                self.replace(worst, reflected, f_r);
                SimplexMove::Reflect
            }
        } else if f_r < self.values[n - 1] {
            self.replace(worst, reflected, f_r);
            SimplexMove::Reflect
        } else if f_r < self.values[worst] {
            let contracted = along(cfg.reflection * cfg.contraction, &self.vertices[worst]);
            let f_c = f(&contracted);
            if f_c <= f_r {
                self.replace(worst, contracted, f_c);
                SimplexMove::ContractOutside
            } else {
                self.shrink(f, cfg.shrink);
                SimplexMove::Shrink
            }
        } else {
            let contracted = along(-cfg.contraction, &self.vertices[worst]);
            let f_c = f(&contracted);
            if f_c < self.values[worst] {
                self.replace(worst, contracted, f_c);
                SimplexMove::ContractInside
            } else {
                self.shrink(f, cfg.shrink);
                SimplexMove::Shrink
            }
        };
        self.sort();
        mv
    }

    fn replace(&mut self, idx: usize, v: Vec<f64>, value: f64) {
        self.vertices[idx] = v;
        self.values[idx] = value;
    }

    fn shrink<F: FnMut(&[f64]) -> f64>(&mut self, f: &mut F, sigma: f64) {
        let best = self.vertices[0].clone();
        for i in 1..self.vertices.len() {
            for (x, b) in self.vertices[i].iter_mut().zip(&best) {
                *x = b + sigma * (*x - b);
            }
            self.values[i] = f(&self.vertices[i]);
        }
    }
}

/// Nelder-Mead over the seven joint angles. A simplex that collapses below
/// `degenerate_volume` is rebuilt around a fresh random seed.
pub fn solve_nelder_mead<R: Rng + ?Sized>(
    model: &KinematicModel,
    target: &Position3,
    seed: &JointVector,
    config: &NelderMeadConfig,
    budget: &Budget,
    rng: &mut R,
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
    let mut objective = |x: &[f64]| {
        let q = model.normalize(&JointVector::from_slice(x).expect("simplex vertices have 7 entries"));
        model.fitness(&q, target)
    };
    let mut simplex = Simplex::new(&mut objective, &start.0, config.initial_simplex_scale);
    let mut iteration = 0;
    offer_best(&mut progress, &simplex);

    while !progress.done(iteration) {
        simplex.step(&mut objective, config);
        iteration += 1;
        offer_best(&mut progress, &simplex);
        progress.checkpoint(iteration);
        if !progress.converged() && simplex.relative_volume() < config.degenerate_volume {
            let fresh = model.random_joints(rng);
            simplex = Simplex::new(&mut objective, &fresh.0, config.initial_simplex_scale);
            offer_best(&mut progress, &simplex);
        }
    }
    progress.finish(iteration)
}

fn offer_best(progress: &mut Progress<'_>, simplex: &Simplex) {
    let (x, _) = simplex.best();
    let q = progress
        .model()
        .normalize(&JointVector::from_slice(x).expect("7 entries"));
    let fitness = progress.fitness(&q);
    progress.offer(&q, fitness);
}
