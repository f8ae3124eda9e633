//! Kernel density estimation under Berkson error.
//!
//! Given a sample from an error-free density `f_X` and a known error
//! density `f_ε`, the target of estimation is the convolution
//! `f_Y = f_X ⊛ f_ε`. This crate evaluates the estimator's exact and
//! spectral MISE for Gaussian-mixture models, selects bandwidths by
//! three competing strategies (optimal for `f_Y`, optimal for `f_X`, and
//! no smoothing), and drives the simulation and real-data experiments
//! built on those pieces.

pub mod bandwidth;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod gaussmix;
pub mod mise_exact;
pub mod moments;
pub mod montecarlo;
pub mod quad;
pub mod report;
pub mod rng;
pub mod selftest;
pub mod spectral;

pub use error::{BerksonError, Result};
pub use estimator::{DensityCurve, SampleMatrix};
pub use gaussmix::{GaussianComponent, GaussianMixture};
pub use mise_exact::BandwidthSpec;
pub use spectral::BerksonModel;
