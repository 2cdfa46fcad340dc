//! One entry point for every solver, keyed by [`SolverId`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dtnr::{solve_dtnr, DtnrConfig};
use crate::error::{Error, Result};
use crate::kinematics::{KinematicModel, Position3};
use crate::meta::{
    solve_afsa, solve_ccd, solve_de, solve_ga, solve_pso, solve_qpso, solve_sa, AfsaConfig, CcdConfig, DeConfig,
    GaConfig, PsoConfig, QpsoConfig, SaConfig,
};
use crate::ml::RegressionTree;
use crate::numeric::{solve_nelder_mead, solve_newton_raphson, NelderMeadConfig, NewtonConfig};
use crate::solver::{Budget, SolveResult, SolverId};

/// Hyperparameters for all solvers. Missing tables fall back to defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfigs {
    pub dtnr: DtnrConfig,
    pub nr: NewtonConfig,
    pub nm: NelderMeadConfig,
    pub sa: SaConfig,
    pub pso: PsoConfig,
    pub qpso: QpsoConfig,
    pub ccd: CcdConfig,
    pub afsa: AfsaConfig,
    pub ga: GaConfig,
    pub de: DeConfig,
}

impl SolverConfigs {
    /// Reads a TOML document with one optional table per solver.
    pub fn parse(text: &str) -> Result<Self> {
        let configs: SolverConfigs = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<solver configs>".into(),
            message: e.to_string(),
        })?;
        configs.validate()?;
        Ok(configs)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.dtnr.validate()?;
        self.nr.validate()?;
        self.nm.validate()?;
        self.sa.validate()?;
        self.pso.validate()?;
        self.qpso.validate()?;
        self.ccd.validate()?;
        self.afsa.validate()?;
        self.ga.validate()?;
        self.de.validate()
    }

    /// The solver's own iteration cap.
    pub fn iteration_cap(&self, id: SolverId) -> usize {
        match id {
            SolverId::Dtnr => self.dtnr.newton.max_iterations,
            SolverId::Nr => self.nr.max_iterations,
            SolverId::Nm => self.nm.max_iterations,
            SolverId::Sa => self.sa.levels(),
            SolverId::Pso => self.pso.max_iterations,
            SolverId::Qpso => self.qpso.max_iterations,
            SolverId::Ccd => self.ccd.max_cycles,
            SolverId::Afsa => self.afsa.max_iterations,
            SolverId::Ga => self.ga.generations,
            SolverId::De => self.de.generations,
        }
    }

    /// Overrides one hyperparameter given as `"<solver>.<field>"`, e.g.
    /// `"ga.population_size"`.
    pub fn set(&mut self, parameter: &str, value: f64) -> Result<()> {
        let (solver, field) = parameter.split_once('.').ok_or_else(|| Error::UnknownParameter {
            solver: String::new(),
            parameter: parameter.to_string(),
        })?;
        let mut tree = serde_json::to_value(*self)?;
        let unknown = || Error::UnknownParameter {
            solver: solver.to_string(),
            parameter: field.to_string(),
        };
        let table = tree
            .get_mut(solver.to_ascii_lowercase())
            .and_then(|t| t.as_object_mut())
            .ok_or_else(unknown)?;
        let slot = table.get_mut(field).ok_or_else(unknown)?;
        *slot = match slot {
            serde_json::Value::Number(n) if n.is_u64() || n.is_i64() => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::config(format!("{parameter} takes a non-negative integer")));
                }
                serde_json::Value::from(value as u64)
            }
            serde_json::Value::Number(_) => serde_json::Value::from(value),
            serde_json::Value::Bool(_) => serde_json::Value::Bool(value != 0.0),
            _ => return Err(unknown()),
        };
        let updated: SolverConfigs = serde_json::from_value(tree)?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }
}

/// Runs `id` once. NR, NM and CCD start from a uniformly random seed drawn
/// from `rng`; DTNR needs `tree`.
pub fn solve<R: Rng + ?Sized>(
    id: SolverId,
    model: &KinematicModel,
    target: &Position3,
    configs: &SolverConfigs,
    budget: &Budget,
    tree: Option<&RegressionTree>,
    rng: &mut R,
) -> Result<SolveResult> {
    Ok(match id {
        SolverId::Dtnr => {
            let tree = tree.ok_or_else(|| Error::MissingModel("DTNR needs a trained regression tree".into()))?;
            solve_dtnr(tree, model, target, &configs.dtnr, budget)
        }
        SolverId::Nr => {
            let seed = model.random_joints(rng);
            solve_newton_raphson(model, target, &seed, &configs.nr, budget)
        }
        SolverId::Nm => {
            let seed = model.random_joints(rng);
            solve_nelder_mead(model, target, &seed, &configs.nm, budget, rng)
        }
        SolverId::Ccd => {
            let seed = model.random_joints(rng);
            solve_ccd(model, target, &seed, &configs.ccd, budget)
        }
        SolverId::Sa => solve_sa(model, target, &configs.sa, budget, rng),
        SolverId::Pso => solve_pso(model, target, &configs.pso, budget, rng),
        SolverId::Qpso => solve_qpso(model, target, &configs.qpso, budget, rng),
        SolverId::Afsa => solve_afsa(model, target, &configs.afsa, budget, rng),
        SolverId::Ga => solve_ga(model, target, &configs.ga, budget, rng),
        SolverId::De => solve_de(model, target, &configs.de, budget, rng),
    })
}
