pub mod algorithms;
pub mod bench;
pub mod dtnr;
pub mod error;
pub mod kinematics;
pub mod meta;
pub mod ml;
pub mod numeric;
pub mod solver;
pub mod workspace;

pub use error::{Error, Result};

/// The generator behind every random draw in the crate, seeded from `seed`.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kinematics.md")]
    mod kinematics {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/learned-seeds.md")]
    mod learned_seeds {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
