use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::DROP_TOL;

/// Sparse spectrum on the torus with integer frequencies in `[-F, F]`.
///
/// Points are doubles; phases stay accurate to about `F·2^-52` radians, so `F <= 2^40` keeps them below 1e-3.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusSpectrum<T: Scalar = f64> {
    bandlimit: u64,
    entries: BTreeMap<i64, Complex<T>>,
}

impl<T: Scalar> TorusSpectrum<T> {
    pub fn new(bandlimit: u64) -> Self {
        TorusSpectrum { bandlimit, entries: BTreeMap::new() }
    }

    pub fn from_entries<I: IntoIterator<Item = (i64, Complex<T>)>>(bandlimit: u64, entries: I) -> Result<Self> {
        let mut s = Self::new(bandlimit);
        for (xi, c) in entries {
            s.insert(xi, c)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, xi: i64, c: Complex<T>) -> Result<()> {
        if xi.unsigned_abs() > self.bandlimit {
            return Err(Error::InvalidParam(format!("frequency {xi} outside [-{0}, {0}]", self.bandlimit)));
        }
        if c.norm() < T::lit(DROP_TOL) {
            self.entries.remove(&xi);
        } else {
            self.entries.insert(xi, c);
        }
        Ok(())
    }

    pub fn bandlimit(&self) -> u64 {
        self.bandlimit
    }

    pub fn get(&self, xi: i64) -> Complex<T> {
        self.entries.get(&xi).copied().unwrap_or_else(Complex::default)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &Complex<T>)> {
        self.entries.iter()
    }

    pub fn support(&self) -> Vec<i64> {
        self.entries.keys().copied().collect()
    }

    pub fn l0(&self) -> usize {
        self.entries.len()
    }

    pub fn l1(&self) -> T {
        self.entries.values().map(|c| c.norm()).sum()
    }

    pub fn l2(&self) -> T {
        self.entries.values().map(|c| c.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn eval(&self, t: T) -> Complex<T> {
        torus_eval(self, t)
    }

    pub fn linf_distance(&self, other: &Self) -> T {
        let mut m = T::zero();
        for xi in self.entries.keys().chain(other.entries.keys()) {
            m = m.max((self.get(*xi) - other.get(*xi)).norm());
        }
        m
    }
}

/// `e^{2πi·ξ·t}` with the phase reduced modulo 1 before scaling.
pub fn character<T: Scalar>(xi: i64, t: T) -> Complex<T> {
    let p = T::from_i64(xi).unwrap() * t;
    let frac = p - p.round();
    let a = (T::PI() + T::PI()) * frac;
    Complex::new(a.cos(), a.sin())
}

pub fn torus_eval<T: Scalar>(spec: &TorusSpectrum<T>, t: T) -> Complex<T> {
    spec.entries.iter().fold(Complex::new(T::zero(), T::zero()), |acc, (xi, c)| acc + *c * character(*xi, t))
}
