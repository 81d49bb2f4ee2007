//! Dense bounded-variable simplex.
//!
//! Rows are scaled so that every row owns a unit column (slack, surplus or artificial) in the
//! starting basis. Those columns hold `B^{-1}` throughout, which gives duals, RHS sensitivity and
//! periodic refactor-free refreshes of the basic values.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T: Scalar = f64> {
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

/// `minimize c·x` subject to linear rows and per-variable bounds (infinite bounds allowed).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem<T: Scalar = f64> {
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
    pub bounds: Vec<(T, T)>,
    pub names: Vec<String>,
}

impl<T: Scalar> LpProblem<T> {
    pub fn new() -> Self {
        LpProblem { objective: Vec::new(), constraints: Vec::new(), bounds: Vec::new(), names: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: T, lo: T, hi: T) -> usize {
        self.objective.push(cost);
        self.bounds.push((lo, hi));
        self.names.push(name.into());
        self.objective.len() - 1
    }

    /// Nonnegative variable.
    pub fn add_nonneg(&mut self, name: impl Into<String>, cost: T) -> usize {
        self.add_var(name, cost, T::zero(), T::infinity())
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) -> usize {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(Error::Dimension { expected: n, got: self.bounds.len() });
        }
        if self.names.len() != n {
            return Err(Error::Dimension { expected: n, got: self.names.len() });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParam("non-finite objective coefficient".into()));
        }
        for &(lo, hi) in &self.bounds {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == T::infinity() || hi == T::neg_infinity() {
                return Err(Error::InvalidParam("inconsistent variable bounds".into()));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(Error::InvalidParam("non-finite right-hand side".into()));
            }
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(Error::Dimension { expected: n, got: j + 1 });
                }
                if !a.is_finite() {
                    return Err(Error::InvalidParam("non-finite constraint coefficient".into()));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `x`, relative to `1 + |rhs|`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for c in &self.constraints {
            let lhs: T = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v / (T::one() + c.rhs.abs()));
        }
        for (xj, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - *xj).max(*xj - hi);
        }
        worst
    }

    pub fn objective_at(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(c, v)| *c * *v).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl LpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration-limited",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T: Scalar = f64> {
    pub status: LpStatus,
    pub values: Vec<T>,
    pub objective: T,
    /// Row multipliers `y` with `c - A^T y` the reduced costs.
    pub duals: Vec<T>,
    /// Some basic variable sits at a bound.
    pub primal_degenerate: bool,
    /// Some nonbasic variable has zero reduced cost, so the optimum may not be unique.
    pub dual_degenerate: bool,
    pub iterations: usize,
}

/// Largest dense tableau, in entries.
pub const TABLEAU_GUARD: u128 = 1 << 27;
const NONE: usize = usize::MAX;
/// Columns with at most this many nonzeros are not stored.
const SPARSE_COL: usize = 4;

/// Pivots between recomputations of the basic values and reduced costs.
const REFRESH_EVERY: usize = 100;

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub pivot_tol: f64,
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iter: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { pivot_tol: 1e-10, feas_tol: 1e-7, opt_tol: 1e-9, max_iter: 0, bland_after: 50 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum VarMap<T> {
    Shift { col: usize, lo: T },
    Reflect { col: usize, hi: T },
    Split { pos: usize, neg: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Structural,
    Logical,
    Artificial,
}

/// Solver state; kept alive between RHS changes for warm re-optimization.
#[derive(Clone, Debug)]
pub struct Simplex<T: Scalar = f64> {
    opts: SimplexOptions,
    m: usize,
    ncols: usize,
    /// Stored tableau columns, `m × ns`, row-major.
    ns: usize,
    tab: Vec<T>,
    /// Stored slot of each column, or `NONE` for columns kept as combinations of stored ones.
    slot: Vec<usize>,
    stored_cols: Vec<usize>,
    combo: Vec<Vec<(usize, T)>>,
    d: Vec<T>,
    /// Costs of the current phase.
    cur: Vec<T>,
    xb: Vec<T>,
    basis: Vec<usize>,
    state: Vec<State>,
    ub: Vec<T>,
    cost: Vec<T>,
    kind: Vec<Kind>,
    init_col: Vec<usize>,
    sign: Vec<T>,
    /// Scaled sparse columns of the original system, for refreshes.
    acols: Vec<Vec<(usize, T)>>,
    brhs: Vec<T>,
    /// RHS offset from shifted/reflected variables, in original row units.
    rhs_shift: Vec<T>,
    orig_rhs: Vec<T>,
    map: Vec<VarMap<T>>,
    obj_const: T,
    orig_cost: Vec<T>,
    iterations: usize,
    status: LpStatus,
    bland: bool,
    degenerate_run: usize,
    /// Pivots since the basic values and reduced costs were recomputed.
    stale: usize,
}

fn tol<T: Scalar>(v: f64) -> T {
    T::lit(v)
}

impl<T: Scalar> Simplex<T> {
    pub fn new(p: &LpProblem<T>, opts: SimplexOptions) -> Result<Self> {
        p.validate()?;
        let m = p.constraints.len();
        let mut map = Vec::with_capacity(p.num_vars());
        let mut ub: Vec<T> = Vec::new();
        let mut cost: Vec<T> = Vec::new();
        let mut obj_const = T::zero();
        for (j, &(lo, hi)) in p.bounds.iter().enumerate() {
            let c = p.objective[j];
            if lo.is_finite() {
                map.push(VarMap::Shift { col: ub.len(), lo });
                ub.push(hi - lo);
                cost.push(c);
                obj_const = obj_const + c * lo;
            } else if hi.is_finite() {
                map.push(VarMap::Reflect { col: ub.len(), hi });
                ub.push(T::infinity());
                cost.push(-c);
                obj_const = obj_const + c * hi;
            } else {
                map.push(VarMap::Split { pos: ub.len(), neg: ub.len() + 1 });
                ub.push(T::infinity());
                ub.push(T::infinity());
                cost.push(c);
                cost.push(-c);
            }
        }
        let nstruct = ub.len();
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); m];
        let mut rhs_shift = vec![T::zero(); m];
        for (r, con) in p.constraints.iter().enumerate() {
            for &(j, a) in &con.coeffs {
                if a == T::zero() {
                    continue;
                }
                match map[j] {
                    VarMap::Shift { col, lo } => {
                        rows[r].push((col, a));
                        rhs_shift[r] = rhs_shift[r] + a * lo;
                    }
                    VarMap::Reflect { col, hi } => {
                        rows[r].push((col, -a));
                        rhs_shift[r] = rhs_shift[r] + a * hi;
                    }
                    VarMap::Split { pos, neg } => {
                        rows[r].push((pos, a));
                        rows[r].push((neg, -a));
                    }
                }
            }
        }
        let orig_rhs: Vec<T> = p.constraints.iter().map(|c| c.rhs).collect();
        let mut kind = vec![Kind::Structural; nstruct];
        let mut sign = vec![T::one(); m];
        let mut init_col = vec![0; m];
        let mut brhs = vec![T::zero(); m];
        for (r, con) in p.constraints.iter().enumerate() {
            let b = con.rhs - rhs_shift[r];
            let s = if b < T::zero() { -T::one() } else { T::one() };
            sign[r] = s;
            brhs[r] = b * s;
            // logical column coefficient in the original row
            let logical = match con.relation {
                Relation::Le => Some(T::one()),
                Relation::Ge => Some(-T::one()),
                Relation::Eq => None,
            };
            if let Some(a) = logical {
                let col = ub.len();
                ub.push(T::infinity());
                cost.push(T::zero());
                kind.push(Kind::Logical);
                rows[r].push((col, a));
                if a * s > T::zero() {
                    init_col[r] = col;
                    continue;
                }
            }
            let col = ub.len();
            ub.push(T::infinity());
            cost.push(T::zero());
            kind.push(Kind::Artificial);
            rows[r].push((col, s));
            init_col[r] = col;
        }
        let ncols = ub.len();
        let mut acols: Vec<Vec<(usize, T)>> = vec![Vec::new(); ncols];
        for (r, row) in rows.iter().enumerate() {
            for &(col, a) in row {
                acols[col].push((r, a * sign[r]));
            }
        }
        // B^{-1} a_j is a combination of the initial unit columns for sparse a_j, and the negation of a stored
        // column for mirrored pairs; only the rest is stored
        let mut slot = vec![NONE; ncols];
        let mut stored_cols = Vec::new();
        for &c in &init_col {
            slot[c] = stored_cols.len();
            stored_cols.push(c);
        }
        let key = |col: &[(usize, T)], s: T| -> Vec<(usize, u64)> {
            col.iter().map(|&(r, a)| (r, (a * s).to_f64().unwrap_or(f64::NAN).to_bits())).collect()
        };
        let mut seen: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();
        let mut combo: Vec<Vec<(usize, T)>> = vec![Vec::new(); ncols];
        for j in 0..ncols {
            if slot[j] != NONE {
                continue;
            }
            if acols[j].len() <= SPARSE_COL {
                combo[j] = acols[j].iter().map(|&(r, a)| (slot[init_col[r]], a)).collect();
            } else if let Some(&k) = seen.get(&key(&acols[j], -T::one())) {
                combo[j] = vec![(slot[k], -T::one())];
            } else {
                seen.insert(key(&acols[j], T::one()), j);
                slot[j] = stored_cols.len();
                stored_cols.push(j);
            }
        }
        let ns = stored_cols.len();
        if (m as u128) * (ns as u128) > TABLEAU_GUARD {
            return Err(Error::GuardExceeded { size: m as u128 * ns as u128, guard: TABLEAU_GUARD });
        }
        let mut tab = vec![T::zero(); m * ns];
        for (s, &j) in stored_cols.iter().enumerate() {
            for &(r, v) in &acols[j] {
                tab[r * ns + s] = tab[r * ns + s] + v;
            }
        }
        let mut state = vec![State::Lower; ncols];
        for (r, &c) in init_col.iter().enumerate() {
            state[c] = State::Basic(r);
        }
        let max_iter = if opts.max_iter == 0 { 50_000 + 50 * (m + ncols) } else { opts.max_iter };
        Ok(Simplex {
            opts: SimplexOptions { max_iter, ..opts },
            m,
            ncols,
            ns,
            tab,
            slot,
            stored_cols,
            combo,
            d: vec![T::zero(); ncols],
            cur: vec![T::zero(); ncols],
            xb: brhs.clone(),
            basis: init_col.clone(),
            state,
            ub,
            cost,
            kind,
            init_col,
            sign,
            acols,
            brhs,
            rhs_shift,
            orig_rhs,
            map,
            obj_const,
            orig_cost: p.objective.clone(),
            iterations: 0,
            status: LpStatus::Optimal,
            bland: false,
            degenerate_run: 0,
            stale: 0,
        })
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> T {
        let row = &self.tab[r * self.ns..(r + 1) * self.ns];
        match self.slot[c] {
            NONE => self.combo[c].iter().fold(T::zero(), |acc, &(s, a)| acc + a * row[s]),
            s => row[s],
        }
    }

    fn column(&self, c: usize) -> Vec<T> {
        (0..self.m).map(|i| self.at(i, c)).collect()
    }

    /// Reduced costs of the implicit columns from those of the stored ones.
    fn update_implicit_d(&mut self) {
        for j in 0..self.ncols {
            if self.slot[j] != NONE {
                continue;
            }
            let mut v = self.cur[j];
            for &(s, a) in &self.combo[j] {
                let k = self.stored_cols[s];
                v = v - a * (self.cur[k] - self.d[k]);
            }
            self.d[j] = if matches!(self.state[j], State::Basic(_)) { T::zero() } else { v };
        }
    }

    fn set_costs(&mut self, phase_one: bool) {
        let c: Vec<T> = (0..self.ncols)
            .map(|j| match (phase_one, self.kind[j]) {
                (true, Kind::Artificial) => T::one(),
                (true, _) => T::zero(),
                (false, Kind::Artificial) => T::zero(),
                (false, _) => self.cost[j],
            })
            .collect();
        self.recompute_reduced_costs(&c);
    }

    fn active_costs(&self) -> Vec<T> {
        (0..self.ncols).map(|j| if self.kind[j] == Kind::Artificial { T::zero() } else { self.cost[j] }).collect()
    }

    fn recompute_reduced_costs(&mut self, c: &[T]) {
        self.cur = c.to_vec();
        let mut d = c.to_vec();
        for r in 0..self.m {
            let cb = c[self.basis[r]];
            if cb == T::zero() {
                continue;
            }
            let row = &self.tab[r * self.ns..(r + 1) * self.ns];
            for (&j, &a) in self.stored_cols.iter().zip(row) {
                d[j] = d[j] - cb * a;
            }
        }
        for r in 0..self.m {
            d[self.basis[r]] = T::zero();
        }
        self.d = d;
        self.update_implicit_d();
    }

    /// Recomputes basic values from `B^{-1}` (held in the initial unit columns).
    fn refresh_xb(&mut self) {
        let mut rhs = self.brhs.clone();
        for j in 0..self.ncols {
            if self.state[j] == State::Upper {
                for &(r, a) in &self.acols[j] {
                    rhs[r] = rhs[r] - a * self.ub[j];
                }
            }
        }
        for i in 0..self.m {
            let mut v = T::zero();
            for (r, &br) in rhs.iter().enumerate() {
                v = v + self.at(i, self.init_col[r]) * br;
            }
            self.xb[i] = v;
        }
    }

    fn refresh(&mut self, phase_one: bool) {
        self.stale = 0;
        self.refresh_xb();
        let c: Vec<T> = if phase_one {
            (0..self.ncols).map(|j| if self.kind[j] == Kind::Artificial { T::one() } else { T::zero() }).collect()
        } else {
            self.active_costs()
        };
        self.cur = c.clone();
        // duals of the scaled rows, then d = c - A^T π
        let mut pi = vec![T::zero(); self.m];
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != T::zero() {
                for (r, p) in pi.iter_mut().enumerate() {
                    *p = *p + cb * self.at(i, self.init_col[r]);
                }
            }
        }
        for j in 0..self.ncols {
            if let State::Basic(_) = self.state[j] {
                self.d[j] = T::zero();
                continue;
            }
            self.d[j] = c[j] - self.acols[j].iter().map(|&(r, a)| pi[r] * a).sum::<T>();
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let ns = self.ns;
        let col = self.column(q);
        let inv = T::one() / col[r];
        let mut nz: Vec<usize> = Vec::new();
        for s in 0..ns {
            let v = self.tab[r * ns + s];
            if v != T::zero() {
                self.tab[r * ns + s] = v * inv;
                nz.push(s);
            }
        }
        let qs = self.slot[q];
        if qs != NONE {
            self.tab[r * ns + qs] = T::one();
        }
        let dense = nz.len() * 4 > ns;
        let (before, rest) = self.tab.split_at_mut(r * ns);
        let (prow, after) = rest.split_at_mut(ns);
        for (i, row) in before.chunks_exact_mut(ns).chain(after.chunks_exact_mut(ns)).enumerate() {
            let f = col[if i < r { i } else { i + 1 }];
            if f == T::zero() {
                continue;
            }
            if dense {
                for (x, &p) in row.iter_mut().zip(prow.iter()) {
                    *x = *x - f * p;
                }
            } else {
                for &s in &nz {
                    row[s] = row[s] - f * prow[s];
                }
            }
            if qs != NONE {
                row[qs] = T::zero();
            }
        }
        let f = self.d[q];
        if f != T::zero() {
            for &s in &nz {
                let j = self.stored_cols[s];
                self.d[j] = self.d[j] - f * prow[s];
            }
        }
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.state[q] = State::Basic(r);
        if let State::Basic(_) = self.state[leaving] {
            self.state[leaving] = State::Lower;
        }
        self.d[q] = T::zero();
        self.update_implicit_d();
    }

    fn eligible(&self, j: usize) -> Option<(T, T)> {
        // (score, direction)
        let ot = tol::<T>(self.opts.opt_tol);
        match self.state[j] {
            State::Basic(_) => None,
            _ if self.ub[j] == T::zero() => None,
            State::Lower if self.d[j] < -ot => Some((-self.d[j], T::one())),
            State::Upper if self.d[j] > ot => Some((self.d[j], -T::one())),
            _ => None,
        }
    }

    fn choose_entering(&self) -> Option<(usize, T)> {
        let mut best: Option<(usize, T, T)> = None;
        for j in 0..self.ncols {
            if let Some((score, dir)) = self.eligible(j) {
                if self.bland {
                    return Some((j, dir));
                }
                if best.is_none_or(|(_, s, _)| score > s) {
                    best = Some((j, score, dir));
                }
            }
        }
        best.map(|(j, _, dir)| (j, dir))
    }

    /// Primal simplex from a primal-feasible basis.
    fn primal(&mut self, phase_one: bool) -> LpStatus {
        let pt = tol::<T>(self.opts.pivot_tol);
        let ft = tol::<T>(self.opts.feas_tol);
        loop {
            if self.iterations >= self.opts.max_iter {
                return LpStatus::IterationLimit;
            }
            let Some((q, dir)) = self.choose_entering() else {
                return LpStatus::Optimal;
            };
            self.iterations += 1;
            let col = self.column(q);
            let mut t_min = T::infinity();
            let mut leave: Option<(usize, bool, T, T)> = None;
            for i in 0..self.m {
                let a = col[i];
                if a.abs() <= pt {
                    continue;
                }
                let rate = -dir * a;
                let bvar = self.basis[i];
                let (limit, to_upper) = if rate < T::zero() {
                    ((self.xb[i].max(T::zero())) / (-rate), false)
                } else if self.ub[bvar].is_finite() {
                    (((self.ub[bvar] - self.xb[i]).max(T::zero())) / rate, true)
                } else {
                    continue;
                };
                let eps = ft * T::lit(1e-3);
                let take = match leave {
                    None => true,
                    Some((li, _, la, lim)) => {
                        if limit < lim - eps {
                            true
                        } else if limit <= lim + eps {
                            if self.bland {
                                bvar < self.basis[li]
                            } else {
                                a.abs() > la.abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    leave = Some((i, to_upper, a, limit));
                }
            }
            if let Some((_, _, _, lim)) = leave {
                t_min = lim;
            }
            let flip = self.ub[q];
            if flip.is_finite() && flip <= t_min {
                // bound flip, no basis change
                for (i, &a) in col.iter().enumerate() {
                    if a != T::zero() {
                        self.xb[i] = self.xb[i] - dir * flip * a;
                    }
                }
                self.state[q] = if dir > T::zero() { State::Upper } else { State::Lower };
                self.degenerate_run = 0;
                self.bland = false;
                continue;
            }
            let Some((r, to_upper, _, _)) = leave else {
                return LpStatus::Unbounded;
            };
            let t = t_min;
            if t <= ft * T::lit(1e-3) {
                self.degenerate_run += 1;
                if self.degenerate_run > self.opts.bland_after {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
            for (i, &a) in col.iter().enumerate() {
                if a != T::zero() {
                    self.xb[i] = self.xb[i] - dir * t * a;
                }
            }
            let enter_val = if dir > T::zero() { t } else { self.ub[q] - t };
            let leaving = self.basis[r];
            self.pivot(r, q);
            self.xb[r] = enter_val;
            self.state[leaving] = if to_upper { State::Upper } else { State::Lower };
            self.stale += 1;
            if self.stale >= REFRESH_EVERY {
                self.refresh(phase_one);
            }
        }
    }

    /// Dual simplex from a dual-feasible basis.
    fn dual(&mut self) -> LpStatus {
        let pt = tol::<T>(self.opts.pivot_tol);
        let ft = tol::<T>(self.opts.feas_tol);
        loop {
            if self.iterations >= self.opts.max_iter {
                return LpStatus::IterationLimit;
            }
            let mut pick: Option<(usize, T, bool)> = None;
            for i in 0..self.m {
                let bvar = self.basis[i];
                let scale = T::one() + self.xb[i].abs();
                let (viol, up) = if self.xb[i] < -ft * scale {
                    (-self.xb[i], false)
                } else if self.ub[bvar].is_finite() && self.xb[i] > self.ub[bvar] + ft * scale {
                    (self.xb[i] - self.ub[bvar], true)
                } else {
                    continue;
                };
                if pick.is_none_or(|(_, v, _)| viol > v) {
                    pick = Some((i, viol, up));
                }
            }
            let Some((r, _, to_upper)) = pick else {
                return LpStatus::Optimal;
            };
            self.iterations += 1;
            let target = if to_upper { self.ub[self.basis[r]] } else { T::zero() };
            let mut best: Option<(usize, T, T)> = None;
            for j in 0..self.ncols {
                let a = self.at(r, j);
                if a.abs() <= pt || self.ub[j] == T::zero() {
                    continue;
                }
                let ok = match (self.state[j], to_upper) {
                    (State::Basic(_), _) => false,
                    (State::Lower, false) => a < T::zero(),
                    (State::Upper, false) => a > T::zero(),
                    (State::Lower, true) => a > T::zero(),
                    (State::Upper, true) => a < T::zero(),
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                let better = match best {
                    None => true,
                    Some((_, br, ba)) => ratio < br - T::lit(1e-12) || (ratio <= br + T::lit(1e-12) && a.abs() > ba.abs()),
                };
                if better {
                    best = Some((j, ratio, a));
                }
            }
            let Some((q, _, a)) = best else {
                return LpStatus::Infeasible;
            };
            let step = (self.xb[r] - target) / a;
            let base = if self.state[q] == State::Upper { self.ub[q] } else { T::zero() };
            for (i, &ai) in self.column(q).iter().enumerate() {
                if ai != T::zero() {
                    self.xb[i] = self.xb[i] - ai * step;
                }
            }
            let leaving = self.basis[r];
            self.pivot(r, q);
            self.xb[r] = base + step;
            self.state[leaving] = if to_upper { State::Upper } else { State::Lower };
            self.stale += 1;
            if self.stale >= REFRESH_EVERY {
                self.refresh(false);
            }
        }
    }

    fn drive_out_artificials(&mut self) {
        let pt = tol::<T>(self.opts.pivot_tol);
        for j in 0..self.ncols {
            if self.kind[j] == Kind::Artificial {
                self.ub[j] = T::zero();
                if self.state[j] == State::Upper {
                    self.state[j] = State::Lower;
                }
            }
        }
        for r in 0..self.m {
            if self.kind[self.basis[r]] != Kind::Artificial {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.ncols {
                if self.kind[j] == Kind::Artificial || matches!(self.state[j], State::Basic(_)) {
                    continue;
                }
                let a = self.at(r, j).abs();
                if a > pt && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((q, _)) = best {
                let val = if self.state[q] == State::Upper { self.ub[q] } else { T::zero() };
                let leaving = self.basis[r];
                self.pivot(r, q);
                // degenerate pivot: the artificial is numerically zero
                self.xb[r] = val;
                self.state[leaving] = State::Lower;
            }
        }
        self.refresh_xb();
    }

    fn basis_feasible(&self) -> bool {
        let ft = tol::<T>(self.opts.feas_tol);
        (0..self.m).all(|r| {
            let b = self.basis[r];
            let x = self.xb[r];
            let hi = if self.kind[b] == Kind::Artificial { T::zero() } else { self.ub[b] };
            x >= -ft * (T::one() + x.abs()) && (!hi.is_finite() || x <= hi + ft * (T::one() + x.abs()))
        })
    }

    /// Two-phase solve from the current starting basis.
    pub fn solve(&mut self) -> LpStatus {
        self.refresh_xb();
        let has_art = !self.basis_feasible();
        if has_art {
            self.set_costs(true);
            let st = self.primal(true);
            if st == LpStatus::IterationLimit {
                self.status = st;
                return st;
            }
            self.refresh_xb();
            let infeas: T = (0..self.m)
                .filter(|&r| self.kind[self.basis[r]] == Kind::Artificial)
                .map(|r| self.xb[r].max(T::zero()))
                .sum();
            let scale = T::one() + self.brhs.iter().map(|b| b.abs()).fold(T::zero(), T::max);
            if infeas > tol::<T>(self.opts.feas_tol) * scale {
                self.status = LpStatus::Infeasible;
                return self.status;
            }
        }
        self.drive_out_artificials();
        self.bland = false;
        self.degenerate_run = 0;
        self.set_costs(false);
        let mut st = self.primal(false);
        if st == LpStatus::Optimal {
            self.refresh(false);
            // a clean-up pass after the refresh
            st = self.primal(false);
        }
        self.status = st;
        st
    }

    /// Changes the right-hand side of a row, keeping the basis. Call `reoptimize` afterwards.
    pub fn set_rhs(&mut self, row: usize, value: T) {
        let delta = (value - self.orig_rhs[row]) * self.sign[row];
        self.orig_rhs[row] = value;
        self.brhs[row] = self.brhs[row] + delta;
        let col = self.init_col[row];
        for i in 0..self.m {
            let a = self.at(i, col);
            if a != T::zero() {
                self.xb[i] = self.xb[i] + a * delta;
            }
        }
    }

    /// Restores primal feasibility by dual simplex after RHS changes. Requires a prior optimal solve.
    pub fn reoptimize(&mut self) -> LpStatus {
        if self.status != LpStatus::Optimal && self.status != LpStatus::Infeasible {
            return self.status;
        }
        let before = self.iterations;
        let mut st = self.dual();
        if self.iterations > before && st == LpStatus::Optimal {
            st = self.primal(false);
        }
        self.status = st;
        st
    }

    pub fn status(&self) -> LpStatus {
        self.status
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn internal_values(&self) -> Vec<T> {
        (0..self.ncols)
            .map(|j| match self.state[j] {
                State::Basic(r) => self.xb[r],
                State::Lower => T::zero(),
                State::Upper => self.ub[j],
            })
            .collect()
    }

    /// Values of the original variables at the current basis.
    pub fn values(&self) -> Vec<T> {
        let x = self.internal_values();
        self.map
            .iter()
            .map(|vm| match *vm {
                VarMap::Shift { col, lo } => lo + x[col],
                VarMap::Reflect { col, hi } => hi - x[col],
                VarMap::Split { pos, neg } => x[pos] - x[neg],
            })
            .collect()
    }

    /// Value of one original variable.
    pub fn value(&self, j: usize) -> T {
        let v = |c: usize| match self.state[c] {
            State::Basic(r) => self.xb[r],
            State::Lower => T::zero(),
            State::Upper => self.ub[c],
        };
        match self.map[j] {
            VarMap::Shift { col, lo } => lo + v(col),
            VarMap::Reflect { col, hi } => hi - v(col),
            VarMap::Split { pos, neg } => v(pos) - v(neg),
        }
    }

    pub fn objective(&self) -> T {
        let x = self.internal_values();
        self.obj_const + (0..self.ncols).map(|j| self.cost[j] * x[j]).sum::<T>()
    }

    pub fn duals(&self) -> Vec<T> {
        (0..self.m).map(|r| -self.d[self.init_col[r]] * self.sign[r]).collect()
    }

    pub fn solution(&self) -> LpSolution<T> {
        let ft = tol::<T>(self.opts.feas_tol);
        let ot = tol::<T>(self.opts.opt_tol);
        let primal_degenerate = (0..self.m).any(|r| {
            let b = self.basis[r];
            self.kind[b] != Kind::Artificial
                && (self.xb[r].abs() <= ft || (self.ub[b].is_finite() && (self.ub[b] - self.xb[r]).abs() <= ft))
        });
        let dual_degenerate = (0..self.ncols).any(|j| {
            !matches!(self.state[j], State::Basic(_))
                && self.kind[j] != Kind::Artificial
                && self.ub[j] != T::zero()
                && self.d[j].abs() <= ot
        });
        let values = if self.status == LpStatus::Optimal { self.values() } else { Vec::new() };
        let objective = if self.status == LpStatus::Optimal {
            self.orig_cost.iter().zip(&values).map(|(c, v)| *c * *v).sum()
        } else {
            T::nan()
        };
        LpSolution {
            status: self.status,
            values,
            objective,
            duals: if self.status == LpStatus::Optimal { self.duals() } else { Vec::new() },
            primal_degenerate,
            dual_degenerate,
            iterations: self.iterations,
        }
    }

    /// RHS currently in force for a row.
    pub fn rhs(&self, row: usize) -> T {
        self.orig_rhs[row]
    }

    #[doc(hidden)]
    pub fn shift_of(&self, row: usize) -> T {
        self.rhs_shift[row]
    }
}

pub fn solve_lp_with<T: Scalar>(p: &LpProblem<T>, opts: SimplexOptions) -> Result<LpSolution<T>> {
    let mut s = Simplex::new(p, opts)?;
    s.solve();
    Ok(s.solution())
}

pub fn solve_lp<T: Scalar>(p: &LpProblem<T>) -> Result<LpSolution<T>> {
    solve_lp_with(p, SimplexOptions::default())
}
