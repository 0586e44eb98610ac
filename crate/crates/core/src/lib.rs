//! Sampling and verification tools for a strictly stationary, mixing,
//! `(L-1)`-tuplewise independent sequence whose normalized partial sums do
//! not converge to a normal law.
//!
//! The crate is organized bottom-up:
//!
//! * [`rng`]: counter-based splittable streams,
//! * [`construction`]: the block process `Y⁽ⁿ⁾`, its shift `X⁽ⁿ⁾` and the
//!   thinned process `X̃⁽ⁿ⁾`,
//! * [`sparsifier`]: the thinning operator and its exact mixture formulas,
//! * [`oracle`]: closed-form and enumerated reference values,
//! * [`statistics`]: seeded Monte Carlo estimators with standard errors,
//! * [`harness`]: the suite catalog, run records and reports,
//! * [`cli`]: the command-line front end.

pub mod cli;
pub mod construction;
pub mod error;
pub mod harness;

pub mod oracle;
pub mod rng;
pub mod sparsifier;
pub mod statistics;

pub use construction::{
    build_block, sample_window, sample_x_window, sample_xtilde_window, sample_y_window, subblock_sums, BlockSample,
    ConstructionParams, PathWindow, Process, WindowSampler,
};
pub use error::{Error, Result};
pub use rng::CounterRng;
