//! Monte Carlo estimation of exceedance probabilities of Gaussian process
//! suprema and of Pickands constants, based on the harmonic mean identity
//! `P(sup X > z) = sum_t P(X_t > z) E[1 / L | X_t > z]`, where `L` is the
//! (weighted) time the path spends above the level.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod correlation;
pub mod digest;
pub mod error;
pub mod grid;
pub mod harmonic;
pub mod normal;
pub mod pickands;
pub mod quadrature;
pub mod replicate;
pub mod seed;
pub mod sim;
pub mod occupation;
pub mod stats;
pub mod window;

pub use correlation::CorrelationModel;
pub use error::{Error, Result};
pub use grid::{Grid, WeightMode};
pub use occupation::{sojourn, supremum, WeightFunction};
pub use replicate::{McOptions, Reduction, Replicator};
pub use seed::{Seeds, Stream};
pub use stats::EstimateReport;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/harmonic.md")]
    pub struct Harmonic;
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub struct Simulation;
    #[doc = include_str!("../../../book/src/pickands.md")]
    pub struct Pickands;
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    pub struct Asymptotics;
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    pub struct Reproducibility;
}
