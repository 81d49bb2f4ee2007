//! ℓ1 objectives encoded as linear programs.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::lad::lad_descent;
use crate::lp::simplex::{LpProblem, LpStatus, Relation, Simplex, SimplexOptions};

/// How the modulus of a complex number is linearized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexNorm {
    /// `|re| + |im|`, within √2 of the modulus.
    #[default]
    Surrogate,
    /// Support function of the regular octagon, within `1/cos(π/8)` of the modulus.
    Octagon,
}

pub fn surrogate_norm(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

pub fn octagon_norm(z: Complex64) -> f64 {
    (0..8).map(|k| {
        let th = k as f64 * PI / 4.0;
        z.re * th.cos() + z.im * th.sin()
    })
    .fold(f64::NEG_INFINITY, f64::max)
}

/// Samples for an ℓ1 fit: `design[i][j]` is character `j` at point `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub design: Vec<Vec<Complex64>>,
    pub y: Vec<Complex64>,
    /// Real problems ignore imaginary parts entirely.
    pub complex: bool,
}

impl Samples {
    pub fn real(design: Vec<Vec<f64>>, y: Vec<f64>) -> Self {
        Samples {
            design: design.into_iter().map(|r| r.into_iter().map(|v| Complex64::new(v, 0.0)).collect()).collect(),
            y: y.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            complex: false,
        }
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn num_chars(&self) -> usize {
        self.design.first().map_or(0, |r| r.len())
    }

    fn check(&self) -> Result<()> {
        if self.design.len() != self.y.len() {
            return Err(Error::Dimension { expected: self.y.len(), got: self.design.len() });
        }
        let t = self.num_chars();
        if let Some(r) = self.design.iter().find(|r| r.len() != t) {
            return Err(Error::Dimension { expected: t, got: r.len() });
        }
        Ok(())
    }

    /// Restriction to a subset of characters.
    pub fn columns(&self, cols: &[usize]) -> Samples {
        Samples {
            design: self.design.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect(),
            y: self.y.clone(),
            complex: self.complex,
        }
    }

    pub fn predict(&self, coefs: &[Complex64], i: usize) -> Complex64 {
        self.design[i].iter().zip(coefs).map(|(x, c)| x * c).sum()
    }

    /// `Σ_i |g(x_i) - y_i|` in the norm the LP optimizes.
    pub fn residual(&self, coefs: &[Complex64], norm: ComplexNorm) -> f64 {
        (0..self.m()).map(|i| self.abs(self.predict(coefs, i) - self.y[i], norm)).sum()
    }

    pub fn abs(&self, z: Complex64, norm: ComplexNorm) -> f64 {
        if !self.complex {
            z.re.abs()
        } else {
            match norm {
                ComplexNorm::Surrogate => surrogate_norm(z),
                ComplexNorm::Octagon => octagon_norm(z),
            }
        }
    }
}

#[derive(Clone, Debug)]
enum CoefVars {
    Real { p: usize, q: usize },
    Split { ap: usize, aq: usize, bp: usize, bq: usize },
    Free { a: usize, b: usize },
}

/// The LP `min ‖ĝ‖₁ s.t. Σ_i |g(x_i) - y_i| ≤ Δ` with its variable layout.
#[derive(Clone, Debug)]
pub struct SpectralL1Lp {
    pub problem: LpProblem,
    pub budget_row: usize,
    coefs: Vec<CoefVars>,
    /// Constant moved out of the budget row.
    offset: f64,
}

impl SpectralL1Lp {
    pub fn build(s: &Samples, delta: f64, norm: ComplexNorm) -> Result<Self> {
        s.check()?;
        if delta.is_nan() || delta < 0.0 {
            return Err(Error::InvalidParam(format!("budget {delta} must be nonnegative")));
        }
        let t = s.num_chars();
        if t == 0 {
            return Err(Error::Empty("character set"));
        }
        let mut p = LpProblem::new();
        let mut coefs = Vec::with_capacity(t);
        let octagon = s.complex && norm == ComplexNorm::Octagon;
        for j in 0..t {
            if !s.complex {
                let pj = p.add_nonneg(format!("p{j}"), 1.0);
                let qj = p.add_nonneg(format!("q{j}"), 1.0);
                coefs.push(CoefVars::Real { p: pj, q: qj });
            } else if !octagon {
                let ap = p.add_nonneg(format!("ap{j}"), 1.0);
                let aq = p.add_nonneg(format!("aq{j}"), 1.0);
                let bp = p.add_nonneg(format!("bp{j}"), 1.0);
                let bq = p.add_nonneg(format!("bq{j}"), 1.0);
                coefs.push(CoefVars::Split { ap, aq, bp, bq });
            } else {
                let a = p.add_var(format!("a{j}"), 0.0, f64::NEG_INFINITY, f64::INFINITY);
                let b = p.add_var(format!("b{j}"), 0.0, f64::NEG_INFINITY, f64::INFINITY);
                let tj = p.add_nonneg(format!("t{j}"), 1.0);
                for (c, sn) in octagon_dirs() {
                    p.add_constraint(vec![(tj, 1.0), (a, -c), (b, -sn)], Relation::Ge, 0.0);
                }
                coefs.push(CoefVars::Free { a, b });
            }
        }
        // g(x_i) as linear terms for the real and imaginary parts
        let re_terms = |row: &[Complex64]| -> Vec<(usize, f64)> {
            let mut v = Vec::new();
            for (j, x) in row.iter().enumerate() {
                match coefs[j] {
                    CoefVars::Real { p: pj, q: qj } => {
                        v.push((pj, x.re));
                        v.push((qj, -x.re));
                    }
                    CoefVars::Split { ap, aq, bp, bq } => {
                        v.extend([(ap, x.re), (aq, -x.re), (bp, -x.im), (bq, x.im)]);
                    }
                    CoefVars::Free { a, b } => v.extend([(a, x.re), (b, -x.im)]),
                }
            }
            v
        };
        let im_terms = |row: &[Complex64]| -> Vec<(usize, f64)> {
            let mut v = Vec::new();
            for (j, x) in row.iter().enumerate() {
                match coefs[j] {
                    CoefVars::Real { .. } => {}
                    CoefVars::Split { ap, aq, bp, bq } => {
                        v.extend([(ap, x.im), (aq, -x.im), (bp, x.re), (bq, -x.re)]);
                    }
                    CoefVars::Free { a, b } => v.extend([(a, x.im), (b, x.re)]),
                }
            }
            v
        };
        let mut budget: Vec<(usize, f64)> = Vec::new();
        let mut dense: BTreeMap<usize, f64> = BTreeMap::new();
        let mut offset = 0.0;
        let parts: &[bool] = if s.complex { &[true, false] } else { &[true] };
        for i in 0..s.m() {
            if octagon {
                let rr = p.add_var(format!("rr{i}"), 0.0, f64::NEG_INFINITY, f64::INFINITY);
                let ri = p.add_var(format!("ri{i}"), 0.0, f64::NEG_INFINITY, f64::INFINITY);
                let mut row = re_terms(&s.design[i]);
                row.push((rr, -1.0));
                p.add_constraint(row, Relation::Eq, s.y[i].re);
                let mut row = im_terms(&s.design[i]);
                row.push((ri, -1.0));
                p.add_constraint(row, Relation::Eq, s.y[i].im);
                let e = p.add_nonneg(format!("e{i}"), 0.0);
                for (c, sn) in octagon_dirs() {
                    p.add_constraint(vec![(e, 1.0), (rr, -c), (ri, -sn)], Relation::Ge, 0.0);
                }
                budget.push((e, 1.0));
                continue;
            }
            for &is_re in parts {
                let (row, target) =
                    if is_re { (re_terms(&s.design[i]), s.y[i].re) } else { (im_terms(&s.design[i]), s.y[i].im) };
                // |a| = 2·max(σa, 0) − σa with σ = sign(y): the slack basis is feasible at ĝ = 0
                let sg = if target < 0.0 { -1.0 } else { 1.0 };
                let tag = if is_re { "r" } else { "s" };
                let r = p.add_nonneg(format!("{tag}{i}"), 0.0);
                let mut con: Vec<(usize, f64)> = row.iter().map(|&(v, a)| (v, sg * a)).collect();
                con.push((r, -1.0));
                p.add_constraint(con, Relation::Le, target.abs());
                for (v, a) in row {
                    *dense.entry(v).or_default() -= sg * a;
                }
                budget.push((r, 2.0));
                offset += target.abs();
            }
        }
        budget.extend(dense);
        let budget_row = p.add_constraint(budget, Relation::Le, delta - offset);
        Ok(SpectralL1Lp { problem: p, budget_row, coefs, offset })
    }

    pub fn num_chars(&self) -> usize {
        self.coefs.len()
    }

    pub fn solver(&self) -> Result<Simplex> {
        Simplex::new(&self.problem, SimplexOptions::default())
    }

    /// Right-hand side of the budget row for residual budget `delta`.
    pub fn budget_rhs(&self, delta: f64) -> f64 {
        delta - self.offset
    }

    /// Reads coefficient `j` through a variable-value accessor.
    pub fn coefficient(&self, j: usize, value: impl Fn(usize) -> f64) -> Complex64 {
        match self.coefs[j] {
            CoefVars::Real { p, q } => Complex64::new(value(p) - value(q), 0.0),
            CoefVars::Split { ap, aq, bp, bq } => Complex64::new(value(ap) - value(aq), value(bp) - value(bq)),
            CoefVars::Free { a, b } => Complex64::new(value(a), value(b)),
        }
    }

    pub fn coefficients(&self, value: impl Fn(usize) -> f64) -> Vec<Complex64> {
        (0..self.coefs.len()).map(|j| self.coefficient(j, &value)).collect()
    }
}

fn octagon_dirs() -> impl Iterator<Item = (f64, f64)> {
    (0..8).map(|k| {
        let th = k as f64 * PI / 4.0;
        (th.cos(), th.sin())
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMin {
    pub status: LpStatus,
    pub coefs: Vec<Complex64>,
    /// Optimal linearized `‖ĝ‖₁`.
    pub objective: f64,
    /// `Σ_i |g(x_i) - y_i|` at the optimum.
    pub residual: f64,
}

/// Minimum linearized `‖ĝ‖₁` over spectra on the given characters subject to the residual budget `Δ`.
pub fn l1_spectral_min(s: &Samples, delta: f64, norm: ComplexNorm) -> Result<SpectralMin> {
    let lp = SpectralL1Lp::build(s, delta, norm)?;
    let mut solver = lp.solver()?;
    solver.solve();
    let sol = solver.solution();
    if sol.status != LpStatus::Optimal {
        return Ok(SpectralMin { status: sol.status, coefs: Vec::new(), objective: f64::NAN, residual: f64::NAN });
    }
    let coefs = lp.coefficients(|v| sol.values[v]);
    let residual = s.residual(&coefs, norm);
    Ok(SpectralMin { status: sol.status, coefs, objective: sol.objective, residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Regression {
    pub coefs: Vec<Complex64>,
    pub residual: f64,
    /// The LAD optimum is (detectably) not unique.
    pub non_unique: bool,
}

/// Real fits with at least this many rows go to the descent solver instead of the simplex.
pub const DESCENT_ROWS: usize = 4096;

/// Least-absolute-deviation fit over all columns of `s`, solved through its dual
/// `max y·u s.t. X^T u = 0, |u_i| ≤ 1`. Complex data use the `|re| + |im|` residual on the stacked
/// real system. Large real fits use [`lad_descent`].
pub fn l1_regression(s: &Samples) -> Result<Regression> {
    s.check()?;
    let k = s.num_chars();
    if k == 0 {
        return Err(Error::Empty("support"));
    }
    if s.m() < k {
        return Err(Error::InvalidParam(format!("{} samples for {} characters", s.m(), k)));
    }
    if !s.complex && s.m() >= DESCENT_ROWS {
        let x: Vec<Vec<f64>> = s.design.iter().map(|r| r.iter().map(|c| c.re).collect()).collect();
        let y: Vec<f64> = s.y.iter().map(|c| c.re).collect();
        let fit = lad_descent(&x, &y)?;
        let coefs: Vec<Complex64> = fit.beta.iter().map(|&b| Complex64::new(b, 0.0)).collect();
        return Ok(Regression { coefs, residual: fit.residual, non_unique: fit.non_unique });
    }
    // stacked real rows: (features, target)
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..s.m() {
        if s.complex {
            let re: Vec<f64> = s.design[i].iter().map(|x| x.re).chain(s.design[i].iter().map(|x| -x.im)).collect();
            let im: Vec<f64> = s.design[i].iter().map(|x| x.im).chain(s.design[i].iter().map(|x| x.re)).collect();
            rows.push((re, s.y[i].re));
            rows.push((im, s.y[i].im));
        } else {
            rows.push((s.design[i].iter().map(|x| x.re).collect(), s.y[i].re));
        }
    }
    let width = if s.complex { 2 * k } else { k };
    let mut p = LpProblem::new();
    for (i, (_, y)) in rows.iter().enumerate() {
        p.add_var(format!("u{i}"), -*y, -1.0, 1.0);
    }
    for j in 0..width {
        let coeffs: Vec<(usize, f64)> =
            rows.iter().enumerate().filter(|(_, (r, _))| r[j] != 0.0).map(|(i, (r, _))| (i, r[j])).collect();
        p.add_constraint(coeffs, Relation::Eq, 0.0);
    }
    let mut solver = Simplex::new(&p, SimplexOptions::default())?;
    let st = solver.solve();
    if st != LpStatus::Optimal {
        return Err(Error::LpStatus(st.as_str()));
    }
    let sol = solver.solution();
    let beta: Vec<f64> = sol.duals.iter().map(|d| -d).collect();
    let coefs: Vec<Complex64> = if s.complex {
        (0..k).map(|j| Complex64::new(beta[j], beta[k + j])).collect()
    } else {
        beta.iter().map(|&b| Complex64::new(b, 0.0)).collect()
    };
    let residual = s.residual(&coefs, ComplexNorm::Surrogate);
    Ok(Regression { coefs, residual, non_unique: sol.primal_degenerate })
}
