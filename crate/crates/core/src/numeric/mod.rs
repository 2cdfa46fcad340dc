//! Derivative-based and simplex solvers.

mod nelder_mead;
mod newton;
mod pinv;

pub use nelder_mead::{solve_nelder_mead, NelderMeadConfig, Simplex, SimplexMove};
pub use newton::{solve_newton_raphson, NewtonConfig};
pub(crate) use newton::newton_stage;
pub use pinv::{pseudo_inverse, SINGULAR_VALUE_CUTOFF};
