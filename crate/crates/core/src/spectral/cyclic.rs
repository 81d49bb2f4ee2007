use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::DROP_TOL;

/// Sparse spectrum over Z_B with residues in `[0, B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicSpectrum<T: Scalar = f64> {
    modulus: u64,
    entries: BTreeMap<u64, Complex<T>>,
}

impl<T: Scalar> CyclicSpectrum<T> {
    pub fn new(modulus: u64) -> Self {
        CyclicSpectrum { modulus, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, l: u64, c: Complex<T>) -> Result<()> {
        if l >= self.modulus {
            return Err(Error::InvalidParam(format!("residue {l} outside Z_{}", self.modulus)));
        }
        if c.norm() < T::lit(DROP_TOL) {
            self.entries.remove(&l);
        } else {
            self.entries.insert(l, c);
        }
        Ok(())
    }

    pub fn accumulate(&mut self, l: u64, c: Complex<T>) -> Result<()> {
        let cur = self.get(l);
        self.insert(l, cur + c)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn get(&self, l: u64) -> Complex<T> {
        self.entries.get(&l).copied().unwrap_or_else(Complex::default)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u64, &Complex<T>)> {
        self.entries.iter()
    }

    pub fn support(&self) -> Vec<u64> {
        self.entries.keys().copied().collect()
    }

    pub fn l0(&self) -> usize {
        self.entries.len()
    }

    pub fn l2(&self) -> T {
        self.entries.values().map(|c| c.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn linf_distance(&self, other: &Self) -> T {
        let mut m = T::zero();
        for l in self.entries.keys().chain(other.entries.keys()) {
            m = m.max((self.get(*l) - other.get(*l)).norm());
        }
        m
    }
}

/// `e^{sign·2πi·j/B}` for `j in 0..B`, indexed exactly modulo `B`.
fn roots<T: Scalar>(b: usize, sign: T) -> Vec<Complex<T>> {
    let two_pi = T::PI() + T::PI();
    (0..b)
        .map(|j| {
            let a = sign * two_pi * T::from_usize(j).unwrap() / T::from_usize(b).unwrap();
            Complex::new(a.cos(), a.sin())
        })
        .collect()
}

/// `ẑ(ℓ) = (1/B) Σ_x z[x] e^{-2πiℓx/B}` by direct summation.
pub fn cyclic_dft<T: Scalar>(values: &[Complex<T>]) -> Result<CyclicSpectrum<T>> {
    let b = values.len();
    if b == 0 {
        return Err(Error::Empty("cyclic table"));
    }
    let w = roots(b, -T::one());
    let inv = T::one() / T::from_usize(b).unwrap();
    let mut s = CyclicSpectrum::new(b as u64);
    for l in 0..b {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (x, z) in values.iter().enumerate() {
            acc = acc + *z * w[(l * x) % b];
        }
        s.insert(l as u64, acc * inv)?;
    }
    Ok(s)
}

/// `z[x] = Σ_ℓ ẑ(ℓ) e^{2πiℓx/B}`.
pub fn cyclic_inverse<T: Scalar>(spec: &CyclicSpectrum<T>) -> Vec<Complex<T>> {
    let b = spec.modulus as usize;
    let w = roots(b, T::one());
    (0..b)
        .map(|x| {
            spec.entries
                .iter()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (l, c)| acc + *c * w[(*l as usize * x) % b])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn constant_table() {
        let s = cyclic_dft(&vec![Complex64::new(1.0, 0.0); 6]).unwrap();
        assert_eq!(s.support(), vec![0]);
        assert!((s.get(0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn single_character() {
        let t: Vec<Complex64> =
            (0..5).map(|x| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 2.0 * x as f64 / 5.0)).collect();
        let s = cyclic_dft(&t).unwrap();
        assert_eq!(s.support(), vec![2]);
        assert!((s.get(2) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn empty_rejected() {
        assert!(cyclic_dft::<f64>(&[]).is_err());
    }
}
