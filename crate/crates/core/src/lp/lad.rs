//! Descent solver for real least-absolute-deviation fits with many rows and few columns.
//!
//! `F(β) = Σ w_i |y_i − x_iᵀβ|` is minimized by steepest descent in the box norm: the direction
//! solves a small linear program over the rows with zero residual, and the step is an exact
//! weighted-median line search. Repeated rows are merged into weights first.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::simplex::{LpProblem, LpStatus, Relation, Simplex, SimplexOptions};

const MAX_STEPS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LadFit {
    pub beta: Vec<f64>,
    pub residual: f64,
    pub steps: usize,
    /// The minimizer is not isolated.
    pub non_unique: bool,
}

struct Rows {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    w: Vec<f64>,
}

fn merge(x: &[Vec<f64>], y: &[f64]) -> Rows {
    let mut index: HashMap<(Vec<u64>, u64), usize> = HashMap::new();
    let mut rows = Rows { x: Vec::new(), y: Vec::new(), w: Vec::new() };
    for (xi, &yi) in x.iter().zip(y) {
        let key = (xi.iter().map(|v| (v + 0.0).to_bits()).collect(), (yi + 0.0).to_bits());
        match index.get(&key) {
            Some(&r) => rows.w[r] += 1.0,
            None => {
                index.insert(key, rows.y.len());
                rows.x.push(xi.clone());
                rows.y.push(yi);
                rows.w.push(1.0);
            }
        }
    }
    rows
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Whether some direction `d ≠ 0` has `−gᵀd + Σ_{i∈Z} w_i |x_iᵀd| ≤ 0`, i.e. the optimum is not isolated.
fn flat_direction(g: &[f64], zero: &[(&[f64], f64)]) -> Result<bool> {
    let p = g.len();
    for k in 0..p {
        for s in [1.0, -1.0] {
            let mut lp = LpProblem::new();
            for j in 0..p {
                lp.add_var(format!("d{j}"), if j == k { -s } else { 0.0 }, -1.0, 1.0);
            }
            let mut slope: Vec<(usize, f64)> = g.iter().enumerate().map(|(j, gj)| (j, -gj)).collect();
            for (i, (x, w)) in zero.iter().enumerate() {
                let t = lp.add_nonneg(format!("t{i}"), 0.0);
                slope.push((t, *w));
                let mut plus: Vec<(usize, f64)> = x.iter().enumerate().map(|(j, v)| (j, *v)).collect();
                let mut minus: Vec<(usize, f64)> = plus.iter().map(|&(j, v)| (j, -v)).collect();
                plus.push((t, -1.0));
                minus.push((t, -1.0));
                lp.add_constraint(plus, Relation::Le, 0.0);
                lp.add_constraint(minus, Relation::Le, 0.0);
            }
            lp.add_constraint(slope, Relation::Le, 0.0);
            let mut sx = Simplex::new(&lp, SimplexOptions::default())?;
            if sx.solve() == LpStatus::Optimal && sx.objective() < -1e-9 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Minimum-norm correction that zeroes the residuals treated as zero.
fn polish(beta: &mut [f64], rows: &Rows, r: &[f64], ztol: f64) {
    let idx: Vec<usize> = (0..r.len()).filter(|&i| r[i].abs() <= ztol).collect();
    if idx.is_empty() {
        return;
    }
    let p = beta.len();
    let a = DMatrix::from_fn(idx.len(), p, |i, j| rows.x[idx[i]][j]);
    let b = DVector::from_iterator(idx.len(), idx.iter().map(|&i| r[i]));
    if let Ok(delta) = a.svd(true, true).solve(&b, 1e-10) {
        for (bk, dk) in beta.iter_mut().zip(delta.iter()) {
            *bk += dk;
        }
    }
}

/// `argmin_{‖d‖∞ ≤ 1} −gᵀd + Σ_{i∈Z} w_i |x_iᵀd|` and its value.
fn direction(g: &[f64], zero: &[(&[f64], f64)]) -> Result<(Vec<f64>, f64)> {
    let p = g.len();
    let mut lp = LpProblem::new();
    for (k, gk) in g.iter().enumerate() {
        lp.add_var(format!("d{k}"), -gk, -1.0, 1.0);
    }
    for (i, (x, w)) in zero.iter().enumerate() {
        let t = lp.add_nonneg(format!("t{i}"), *w);
        let mut plus: Vec<(usize, f64)> = x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (k, *v)).collect();
        let mut minus: Vec<(usize, f64)> = plus.iter().map(|&(k, v)| (k, -v)).collect();
        plus.push((t, -1.0));
        minus.push((t, -1.0));
        lp.add_constraint(plus, Relation::Le, 0.0);
        lp.add_constraint(minus, Relation::Le, 0.0);
    }
    let mut s = Simplex::new(&lp, SimplexOptions::default())?;
    let st = s.solve();
    if st != LpStatus::Optimal {
        return Err(Error::LpStatus(st.as_str()));
    }
    let v = s.values();
    Ok((v[..p].to_vec(), s.objective()))
}

/// Minimizes `Σ |y_i − x_iᵀβ|` over real `β`.
pub fn lad_descent(x: &[Vec<f64>], y: &[f64]) -> Result<LadFit> {
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), got: y.len() });
    }
    let p = x.first().map(|r| r.len()).ok_or(Error::Empty("rows"))?;
    if p == 0 {
        return Err(Error::Empty("columns"));
    }
    if let Some(r) = x.iter().find(|r| r.len() != p) {
        return Err(Error::Dimension { expected: p, got: r.len() });
    }
    let rows = merge(x, y);
    let m = rows.y.len();
    let ymax = rows.y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let xmax = rows.x.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let ztol = 1e-12 * (1.0 + ymax);
    let total_w: f64 = rows.w.iter().sum();
    let stop = 1e-12 * total_w * xmax * p as f64;
    let mut beta = vec![0.0; p];
    let mut r = vec![0.0; m];
    let mut steps = 0;
    loop {
        for i in 0..m {
            r[i] = rows.y[i] - dot(&rows.x[i], &beta);
        }
        let mut g = vec![0.0; p];
        let mut zero: Vec<(&[f64], f64)> = Vec::new();
        for i in 0..m {
            if r[i].abs() <= ztol {
                zero.push((&rows.x[i], rows.w[i]));
            } else {
                let s = rows.w[i] * r[i].signum();
                for (gk, xk) in g.iter_mut().zip(&rows.x[i]) {
                    *gk += s * xk;
                }
            }
        }
        let (d, slope) = direction(&g, &zero)?;
        if slope >= -stop || steps == MAX_STEPS {
            if slope < -stop {
                return Err(Error::InvalidParam(format!("descent did not settle in {MAX_STEPS} steps")));
            }
            let non_unique = flat_direction(&g, &zero)?;
            polish(&mut beta, &rows, &r, ztol);
            let residual: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - dot(xi, &beta)).abs()).sum();
            return Ok(LadFit { beta, residual, steps, non_unique });
        }
        steps += 1;
        // F(β + t·d) has slope `slope` at 0+ and gains 2·w_i·|a_i| at each positive breakpoint r_i/a_i
        let mut breaks: Vec<(f64, f64)> = Vec::new();
        for i in 0..m {
            if r[i].abs() <= ztol {
                continue;
            }
            let a = dot(&rows.x[i], &d);
            if a != 0.0 && (a > 0.0) == (r[i] > 0.0) {
                breaks.push((r[i] / a, 2.0 * rows.w[i] * a.abs()));
            }
        }
        breaks.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut slope = slope;
        let mut t = None;
        for (b, gain) in breaks {
            slope += gain;
            if slope >= 0.0 {
                t = Some(b);
                break;
            }
        }
        let t = t.ok_or(Error::LpStatus("unbounded"))?;
        for (bk, dk) in beta.iter_mut().zip(&d) {
            *bk += t * dk;
        }
    }
}
