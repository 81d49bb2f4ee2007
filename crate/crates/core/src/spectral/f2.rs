use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::boolean::BooleanSpectrum;
use crate::spectral::freq::FreqVec;

pub const INVERTIBLE_RETRY_CAP: usize = 1000;

/// Dense matrix over F2 stored as packed rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FreqVec>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        F2Matrix { rows, cols, data: vec![FreqVec::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        F2Matrix { rows: n, cols: n, data: (0..n).map(|i| FreqVec::unit(n, i)).collect() }
    }

    pub fn from_rows(rows: Vec<FreqVec>) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension { expected: cols, got: bad.len() });
        }
        Ok(F2Matrix { rows: rows.len(), cols, data: rows })
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        F2Matrix { rows, cols, data: (0..rows).map(|_| FreqVec::random(cols, rng)).collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &FreqVec {
        &self.data[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, b: bool) {
        self.data[i].set(j, b);
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> F2Matrix {
        let mut t = F2Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &FreqVec) -> Result<FreqVec> {
        if x.len() != self.cols {
            return Err(Error::Dimension { expected: self.cols, got: x.len() });
        }
        let mut y = FreqVec::zeros(self.rows);
        for (i, r) in self.data.iter().enumerate() {
            if r.dot(x) {
                y.set(i, true);
            }
        }
        Ok(y)
    }

    pub fn mul(&self, other: &F2Matrix) -> Result<F2Matrix> {
        if other.rows != self.cols {
            return Err(Error::Dimension { expected: self.cols, got: other.rows });
        }
        let mut out = F2Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) {
                    out.data[i].xor_assign(&other.data[k]);
                }
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        let mut m = self.data.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..self.rows).find(|&r| m[r].get(col)) else { continue };
            m.swap(rank, p);
            let pivot = m[rank].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<F2Matrix> {
        if !self.is_square() {
            return Err(Error::Dimension { expected: self.rows, got: self.cols });
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = F2Matrix::identity(n).data;
        for col in 0..n {
            let p = (col..n).find(|&r| a[r].get(col)).ok_or(Error::Singular)?;
            a.swap(col, p);
            inv.swap(col, p);
            let (pa, pi) = (a[col].clone(), inv[col].clone());
            for r in 0..n {
                if r != col && a[r].get(col) {
                    a[r].xor_assign(&pa);
                    inv[r].xor_assign(&pi);
                }
            }
        }
        Ok(F2Matrix { rows: n, cols: n, data: inv })
    }

    /// `(A^T)^{-1} ξ`.
    pub fn transpose_inverse_apply(&self, xi: &FreqVec) -> Result<FreqVec> {
        self.inverse()?.transpose().mul_vec(xi)
    }
}

/// Uniform sample from GL(n, 2) by rejection. Returns the matrix and the number of draws used.
pub fn random_invertible_f2<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(F2Matrix, usize)> {
    if n == 0 {
        return Err(Error::InvalidParam("n must be positive".into()));
    }
    for attempt in 1..=INVERTIBLE_RETRY_CAP {
        let a = F2Matrix::random(n, n, rng);
        if a.rank() == n {
            return Ok((a, attempt));
        }
    }
    Err(Error::RetriesExhausted(INVERTIBLE_RETRY_CAP))
}

/// Spectrum of `x ↦ g(Ax + b)`: the coefficient at `A^T ζ` is `(-1)^{<b,ζ>} ĝ(ζ)`.
pub fn affine_pullback_spectrum<T: Scalar>(
    spec: &BooleanSpectrum<T>,
    a: &F2Matrix,
    b: &FreqVec,
) -> Result<BooleanSpectrum<T>> {
    let n = spec.n();
    if a.rows() != n || a.cols() != n || b.len() != n {
        return Err(Error::Dimension { expected: n, got: a.rows().max(b.len()) });
    }
    if a.rank() != n {
        return Err(Error::Singular);
    }
    let at = a.transpose();
    let mut out = BooleanSpectrum::new(n);
    for (zeta, c) in spec.iter() {
        let c = if b.dot(zeta) { -*c } else { *c };
        out.insert(at.mul_vec(zeta)?, c)?;
    }
    Ok(out)
}
