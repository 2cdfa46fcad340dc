use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3, JOINTS};
use crate::solver::{Budget, Progress, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcdConfig {
    pub max_cycles: usize,
    /// Joint corrections smaller than this are skipped (rad).
    pub per_joint_tolerance: f64,
    /// Cycles without a new best before the run is declared stuck.
    pub loop_guard: usize,
}

impl Default for CcdConfig {
    fn default() -> Self {
        CcdConfig {
            max_cycles: 300,
            per_joint_tolerance: 1e-12,
            loop_guard: 30,
        }
    }
}

impl CcdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_cycles < 1 || self.loop_guard < 1 || !(self.per_joint_tolerance >= 0.0) {
            return Err(Error::config("ccd max_cycles and loop_guard must be at least 1"));
        }
        Ok(())
    }
}

/// The angle for `joint` that brings the end effector closest to `target`
/// with every other joint held: rotate the projected tool vector onto the
/// projected target vector in the plane normal to the joint axis.
pub fn ccd_joint_update(model: &KinematicModel, q: &JointVector, joint: usize, target: &Position3) -> f64 {
    let frames = model.joint_axes(q);
    let axis = frames.axes[joint];
    let origin = frames.origins[joint];
    let to_tip = frames.tip - origin;
    let to_target = target.to_vector() - origin;
    let tip_planar = to_tip - axis * axis.dot(&to_tip);
    let target_planar = to_target - axis * axis.dot(&to_target);
    if tip_planar.norm() < 1e-12 || target_planar.norm() < 1e-12 {
        return q[joint];
    }
    let angle = axis
        .dot(&tip_planar.cross(&target_planar))
        .atan2(tip_planar.dot(&target_planar));
    q[joint] + angle
}

/// Cyclic coordinate descent sweeping joints from the tool back to the base.
/// One sweep is one iteration; the trace records running minima.
pub fn solve_ccd(
    model: &KinematicModel,
    target: &Position3,
    seed: &JointVector,
    config: &CcdConfig,
    budget: &Budget,
) -> SolveResult {
    let mut q = model.normalize(seed);
    let mut progress = Progress::new(model, *target, budget, config.max_cycles, q, model.fitness(&q, target));
    let mut cycle = 0;
    let mut stale = 0;

    while !progress.done(cycle) {
        let mut moved = false;
        for joint in (0..JOINTS).rev() {
            let updated = ccd_joint_update(model, &q, joint, target);
            if (updated - q[joint]).abs() > config.per_joint_tolerance {
                q[joint] = updated;
                q = model.normalize(&q);
                moved = true;
            }
        }
        cycle += 1;
        let fitness = progress.fitness(&q);
        if progress.offer(&q, fitness) {
            stale = 0;
        } else {
            stale += 1;
        }
        progress.checkpoint(cycle);
        if !moved || stale >= config.loop_guard {
            break;
        }
    }
    progress.finish(cycle)
}
