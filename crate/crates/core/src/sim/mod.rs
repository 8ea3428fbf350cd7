//! Gaussian process simulation.

pub mod conditional;
pub mod drift;
pub mod fbm;
pub mod gaussian;
pub mod path;

pub use conditional::ConditionalSampler;
pub use drift::{exp_mark, DriftedSampler};
pub use fbm::{fbm_covariance, FbmSampler};
pub use gaussian::{Factorization, GaussianSampler};
pub use path::{conditional_path_exceeding, drifted_path, fbm_path, stationary_path, DriftedPath, SamplePath};
