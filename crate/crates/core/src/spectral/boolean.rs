use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::freq::FreqVec;
use crate::spectral::DROP_TOL;

/// Sparse real spectrum over F2^n. Coefficients below `DROP_TOL` in magnitude are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct BooleanSpectrum<T: Scalar = f64> {
    n: usize,
    entries: BTreeMap<FreqVec, T>,
}

impl<T: Scalar> BooleanSpectrum<T> {
    pub fn new(n: usize) -> Self {
        BooleanSpectrum { n, entries: BTreeMap::new() }
    }

    pub fn from_entries<I: IntoIterator<Item = (FreqVec, T)>>(n: usize, entries: I) -> Result<Self> {
        let mut s = Self::new(n);
        for (xi, c) in entries {
            s.insert(xi, c)?;
        }
        Ok(s)
    }

    /// Sets a coefficient, removing it when negligible.
    pub fn insert(&mut self, xi: FreqVec, c: T) -> Result<()> {
        if xi.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: xi.len() });
        }
        if c.abs() < T::lit(DROP_TOL) {
            self.entries.remove(&xi);
        } else {
            self.entries.insert(xi, c);
        }
        Ok(())
    }

    /// Adds to a coefficient.
    pub fn accumulate(&mut self, xi: FreqVec, c: T) -> Result<()> {
        let cur = self.get(&xi);
        self.insert(xi, cur + c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, xi: &FreqVec) -> T {
        self.entries.get(xi).copied().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FreqVec, &T)> {
        self.entries.iter()
    }

    pub fn support(&self) -> Vec<FreqVec> {
        self.entries.keys().cloned().collect()
    }

    pub fn l0(&self) -> usize {
        self.entries.len()
    }

    pub fn l1(&self) -> T {
        self.entries.values().map(|c| c.abs()).sum()
    }

    pub fn l2(&self) -> T {
        self.entries.values().map(|c| *c * *c).sum::<T>().sqrt()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eval(&self, x: &FreqVec) -> Result<T> {
        boolean_eval(self, x)
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut s = Self::new(self.n);
        for (xi, c) in &self.entries {
            let _ = s.insert(xi.clone(), *c * a);
        }
        s
    }

    /// Largest coefficient difference against another spectrum, over the union of supports.
    pub fn linf_distance(&self, other: &Self) -> T {
        let mut m = T::zero();
        for xi in self.entries.keys().chain(other.entries.keys()) {
            m = m.max((self.get(xi) - other.get(xi)).abs());
        }
        m
    }

    pub fn l2_distance(&self, other: &Self) -> T {
        let mut keys: Vec<&FreqVec> = self.entries.keys().chain(other.entries.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.iter().map(|xi| (self.get(xi) - other.get(xi)).powi(2)).sum::<T>().sqrt()
    }

    /// Dense table of function values, index bit `i` being coordinate `i`.
    pub fn to_table(&self) -> Result<Vec<T>> {
        if self.n > 24 {
            return Err(Error::InvalidParam(format!("dense table for n={} too large", self.n)));
        }
        let mut table = vec![T::zero(); 1usize << self.n];
        for (xi, c) in &self.entries {
            table[xi.to_index() as usize] = *c;
        }
        walsh_hadamard(&mut table);
        Ok(table)
    }
}

/// In-place unnormalized Walsh-Hadamard transform.
pub fn walsh_hadamard<T: Scalar>(a: &mut [T]) {
    let n = a.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (a[j], a[j + h]);
                a[j] = x + y;
                a[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

pub fn boolean_dft<T: Scalar>(values: &[T]) -> Result<BooleanSpectrum<T>> {
    let len = values.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros() as usize;
    let mut a = values.to_vec();
    walsh_hadamard(&mut a);
    let scale = T::from_usize(len).unwrap();
    let mut s = BooleanSpectrum::new(n);
    for (idx, v) in a.into_iter().enumerate() {
        s.insert(FreqVec::from_index(n, idx as u64), v / scale)?;
    }
    Ok(s)
}

pub fn boolean_eval<T: Scalar>(spec: &BooleanSpectrum<T>, x: &FreqVec) -> Result<T> {
    if x.len() != spec.n {
        return Err(Error::Dimension { expected: spec.n, got: x.len() });
    }
    Ok(spec.entries.iter().map(|(xi, c)| if xi.dot(x) { -*c } else { *c }).sum())
}
