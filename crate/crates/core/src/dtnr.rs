//! Regression-tree warm start followed by Newton-Raphson on the leading joints.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3, JOINTS};
use crate::ml::RegressionTree;
use crate::numeric::{newton_stage, NewtonConfig};
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtnrConfig {
    /// Joints θ₁..θₖ refined by Newton; the rest keep the tree's values.
    pub refine_joint_count: usize,
    pub newton: NewtonConfig,
    /// Retry with all seven joints when the restricted stage fails.
    pub fallback_enabled: bool,
}

impl Default for DtnrConfig {
    fn default() -> Self {
        DtnrConfig {
            refine_joint_count: 3,
            newton: NewtonConfig {
                max_iterations: 15,
                ..NewtonConfig::default()
            },
            fallback_enabled: false,
        }
    }
}

impl DtnrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=JOINTS).contains(&self.refine_joint_count) {
            return Err(Error::config("refine_joint_count must lie in 1..=7"));
        }
        self.newton.validate()
    }
}

/// The joint vector the tree proposes for `target`, normalised into the limits.
pub fn dtnr_seed(tree: &RegressionTree, model: &KinematicModel, target: &Position3) -> JointVector {
    model.normalize(&tree.predict(target))
}

/// Tree prediction is iteration 0 of the trace; Newton updates follow.
/// `stage_boundary` marks the last iteration of the restricted stage, after
/// which the optional full-arm fallback continues.
pub fn solve_dtnr(
    tree: &RegressionTree,
    model: &KinematicModel,
    target: &Position3,
    config: &DtnrConfig,
    budget: &Budget,
) -> SolveResult {
    let start = Instant::now();
    let seed = dtnr_seed(tree, model, target);
    let mut progress = Progress::started_at(
        start,
        model,
        *target,
        budget,
        config.newton.max_iterations,
        seed,
        model.fitness(&seed, target),
    );
    let mut used = newton_stage(&mut progress, seed, config.refine_joint_count, &config.newton, 0);
    let boundary = used;
    if config.fallback_enabled && !progress.converged() && config.refine_joint_count < JOINTS {
        let from = *progress.best();
        let extra = newton_stage(&mut progress, from, JOINTS, &config.newton, used);
        used += extra;
    }
    let mut result = progress.finish(used);
    result.stage_boundary = Some(boundary);
    result
}
