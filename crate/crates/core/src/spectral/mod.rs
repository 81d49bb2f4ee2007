//! Fourier analysis over {0,1}^n, Z_B and the torus, plus F2 linear algebra.

pub mod boolean;
pub mod cyclic;
pub mod f2;
pub mod freq;
pub mod json;
pub mod torus;

pub use boolean::{boolean_dft, boolean_eval, walsh_hadamard, BooleanSpectrum};
pub use cyclic::{cyclic_dft, cyclic_inverse, CyclicSpectrum};
pub use f2::{affine_pullback_spectrum, random_invertible_f2, F2Matrix};
pub use freq::FreqVec;
pub use torus::{character, torus_eval, TorusSpectrum};

/// Coefficients smaller than this are not stored.
pub const DROP_TOL: f64 = 1e-12;

/// Every point of {0,1}^n in index order.
pub fn cube_points(n: usize) -> impl Iterator<Item = FreqVec> {
    (0..1u64 << n).map(move |i| FreqVec::from_index(n, i))
}
