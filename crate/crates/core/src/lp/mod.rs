//! Linear programming and the two ℓ1 objectives built on it.

pub mod dump;
pub mod l1;
pub mod lad;
pub mod simplex;

pub use dump::dump_lp;
pub use lad::{lad_descent, LadFit};
pub use l1::{
    l1_regression, l1_spectral_min, octagon_norm, surrogate_norm, ComplexNorm, Regression, Samples, SpectralL1Lp,
    SpectralMin,
};
pub use simplex::{
    solve_lp, solve_lp_with, Constraint, LpProblem, LpSolution, LpStatus, Relation, Simplex, SimplexOptions,
};
