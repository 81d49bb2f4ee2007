//! Outlier-robust recovery of Fourier-sparse functions.
//!
//! Signals live on the Boolean cube `{0,1}^n`, on cyclic groups `Z_B`, or on the torus `[0,1)`.
//! Observations come from query oracles that corrupt a `ρ` fraction of answers arbitrarily and
//! perturb the rest by at most `ε`. The decoders reduce recovery to ℓ1 linear programs solved by
//! the in-crate simplex engine.

pub mod boolean_sfft;
pub mod decode;
pub mod error;
pub mod granular;
pub mod harness;
pub mod lab;
pub mod lowdeg;
pub mod lp;
pub mod noise;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod torus_sfft;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type BooleanSpectrum64 = spectral::BooleanSpectrum<f64>;
pub type BooleanSpectrum32 = spectral::BooleanSpectrum<f32>;
pub type TorusSpectrum64 = spectral::TorusSpectrum<f64>;
pub type TorusSpectrum32 = spectral::TorusSpectrum<f32>;
pub type CyclicSpectrum64 = spectral::CyclicSpectrum<f64>;
pub type CyclicSpectrum32 = spectral::CyclicSpectrum<f32>;
pub type LpProblem64 = lp::LpProblem<f64>;
pub type LpProblem32 = lp::LpProblem<f32>;
pub type LpSolution64 = lp::LpSolution<f64>;
pub type LpSolution32 = lp::LpSolution<f32>;
