//! Heuristic, evolutionary and swarm solvers.

mod afsa;
mod ccd;
mod de;
mod ga;
mod pso;
mod qpso;
mod sa;

pub use afsa::{random_step, solve_afsa, AfsaConfig};
pub use ccd::{ccd_joint_update, solve_ccd, CcdConfig};
pub use de::{de_mutant, solve_de, DeConfig};
pub use ga::{breed, solve_ga, GaConfig};
pub use pso::{solve_pso, velocity_update, PsoConfig};
pub use qpso::{mean_best, qpso_coordinate, solve_qpso, QpsoConfig};
pub use sa::{acceptance_probability, metropolis_accept, solve_sa, SaConfig};
