//! Reachable ball of the arm and target sampling inside it.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kinematics::{KinematicModel, Position3};

/// Ball centred on the shoulder, `(0, 0, d₁)`, with radius `d₃ + d₅ + d₇`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceSphere {
    pub center_height: f64,
    pub radius: f64,
}

/// Radial law used when drawing targets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// `r = R·u^(1/3)`, uniform over the ball volume.
    #[default]
    Ball,
    /// `r = √(u·R²)`: uniform over a disk, denser towards the centre of a ball.
    Paper,
}

impl std::str::FromStr for SamplerKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "ball" => Ok(SamplerKind::Ball),
            "paper" => Ok(SamplerKind::Paper),
            other => Err(crate::Error::config(format!(
                "unknown sampler `{other}` (expected `ball` or `paper`)"
            ))),
        }
    }
}

impl WorkspaceSphere {
    pub fn of(model: &KinematicModel) -> Self {
        let links = model.links();
        WorkspaceSphere {
            center_height: links.d1,
            radius: links.d3 + links.d5 + links.d7,
        }
    }

    pub fn center(&self) -> Position3 {
        Position3::new(0.0, 0.0, self.center_height)
    }

    /// Boundary inclusive, with a 1e-9 relative allowance for rounding.
    pub fn is_reachable(&self, target: &Position3) -> bool {
        target.is_finite() && target.distance(&self.center()) <= self.radius * (1.0 + 1e-9)
    }

    /// Distance from `target` to the ball; zero inside.
    pub fn distance_outside(&self, target: &Position3) -> f64 {
        (target.distance(&self.center()) - self.radius).max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position3 {
        self.sample_with(SamplerKind::Ball, rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, kind: SamplerKind, rng: &mut R) -> Position3 {
        let cos_polar: f64 = rng.random_range(-1.0..=1.0);
        let azimuth: f64 = rng.random_range(0.0..TAU);
        let u: f64 = rng.random();
        let r = match kind {
            SamplerKind::Ball => self.radius * u.cbrt(),
            SamplerKind::Paper => (u * self.radius * self.radius).sqrt(),
        };
        let sin_polar = (1.0 - cos_polar * cos_polar).max(0.0).sqrt();
        let (s, c) = azimuth.sin_cos();
        Position3::new(
            r * sin_polar * c,
            r * sin_polar * s,
            self.center_height + r * cos_polar,
        )
    }
}
