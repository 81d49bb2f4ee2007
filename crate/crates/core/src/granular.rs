//! Exhaustive decoding of torus signals with η-granular amplitudes, and the anti-concentration
//! tools it relies on.

use std::f64::consts::PI;

use log::debug;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decode::binomial;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::spectral::{character, TorusSpectrum};

const TAG_POINTS: u64 = 0x61;

/// Default cap on the number of enumerated candidates.
pub const DEFAULT_GUARD: u128 = 10_000_000;

/// The candidate family: k distinct frequencies in `[−F, F]`, amplitudes in `η·ℤ[i] ∖ {0}`,
/// `Σ|v_j|² ≤ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularGrid {
    pub bandlimit: u64,
    pub k: usize,
    pub eta: f64,
}

impl GranularGrid {
    pub fn new(bandlimit: u64, k: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParam(format!("eta = {eta} must be positive")));
        }
        if k == 0 {
            return Err(Error::InvalidParam("k must be positive".into()));
        }
        if k as u64 > 2 * bandlimit + 1 {
            return Err(Error::InvalidParam(format!("k = {k} exceeds the {} frequencies", 2 * bandlimit + 1)));
        }
        Ok(GranularGrid { bandlimit, k, eta })
    }

    fn max_units(&self) -> i64 {
        (1.0 / (self.eta * self.eta) + 1e-9).floor() as i64
    }

    /// Lattice amplitudes `(a, b)` with `0 < a² + b² ≤ 1/η²`, lexicographic in `(re, im)`.
    pub fn lattice(&self) -> Vec<(i64, i64)> {
        let r = self.max_units();
        let s = (r as f64).sqrt().floor() as i64;
        let mut out = Vec::new();
        for a in -s..=s {
            for b in -s..=s {
                let u = a * a + b * b;
                if u > 0 && u <= r {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// `C(2F+1, k)·(2⌊1/η⌋+1)^{2k}`.
    pub fn cardinality_bound(&self) -> u128 {
        let side = 2 * (1.0 / self.eta + 1e-9).floor() as u128 + 1;
        binomial(2 * self.bandlimit + 1, self.k as u64).saturating_mul(side.saturating_pow(2 * self.k as u32))
    }

    /// Ordered amplitude tuples meeting the energy budget.
    fn tuple_count(&self) -> u128 {
        let r = self.max_units() as usize;
        let lat = self.lattice();
        // ways[s] = tuples so far with total lattice energy s
        let mut ways = vec![0u128; r + 1];
        ways[0] = 1;
        for _ in 0..self.k {
            let mut next = vec![0u128; r + 1];
            for (s, &w) in ways.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                for &(a, b) in &lat {
                    let t = s + (a * a + b * b) as usize;
                    if t <= r {
                        next[t] = next[t].saturating_add(w);
                    }
                }
            }
            ways = next;
        }
        ways.iter().fold(0u128, |acc, w| acc.saturating_add(*w))
    }

    /// Exact number of candidates.
    pub fn count(&self) -> u128 {
        binomial(2 * self.bandlimit + 1, self.k as u64).saturating_mul(self.tuple_count())
    }

    pub fn check_guard(&self, guard: u128) -> Result<u128> {
        let size = self.count();
        if size > guard {
            return Err(Error::GuardExceeded { size, guard });
        }
        Ok(size)
    }

    fn amplitude(&self, (a, b): (i64, i64)) -> Complex64 {
        Complex64::new(a as f64 * self.eta, b as f64 * self.eta)
    }

    /// Every candidate once: frequency sets in ascending lexicographic order, amplitudes
    /// lexicographic in `(re, im)` within each set.
    pub fn enumerate(&self, guard: u128) -> Result<GranularIter> {
        self.check_guard(guard)?;
        let lat = self.lattice();
        let r = self.max_units();
        let mut tuples: Vec<Vec<Complex64>> = Vec::new();
        let mut cur: Vec<(i64, i64)> = Vec::new();
        fn rec(
            g: &GranularGrid,
            lat: &[(i64, i64)],
            left: i64,
            cur: &mut Vec<(i64, i64)>,
            out: &mut Vec<Vec<Complex64>>,
        ) {
            if cur.len() == g.k {
                out.push(cur.iter().map(|&p| g.amplitude(p)).collect());
                return;
            }
            for &(a, b) in lat {
                let u = a * a + b * b;
                if u <= left {
                    cur.push((a, b));
                    rec(g, lat, left - u, cur, out);
                    cur.pop();
                }
            }
        }
        rec(self, &lat, r, &mut cur, &mut tuples);
        let f = self.bandlimit as i64;
        let freqs: Vec<i64> = (-f..=f).collect();
        Ok(GranularIter {
            bandlimit: self.bandlimit,
            freqs,
            combo: (0..self.k).collect(),
            tuples,
            next_tuple: 0,
            done: false,
        })
    }
}

pub struct GranularIter {
    bandlimit: u64,
    freqs: Vec<i64>,
    combo: Vec<usize>,
    tuples: Vec<Vec<Complex64>>,
    next_tuple: usize,
    done: bool,
}

impl GranularIter {
    fn advance_combo(&mut self) -> bool {
        let n = self.freqs.len();
        let k = self.combo.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.combo[i] < n - k + i {
                self.combo[i] += 1;
                for j in i + 1..k {
                    self.combo[j] = self.combo[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for GranularIter {
    type Item = TorusSpectrum;

    fn next(&mut self) -> Option<TorusSpectrum> {
        if self.done || self.tuples.is_empty() {
            return None;
        }
        if self.next_tuple == self.tuples.len() {
            if !self.advance_combo() {
                self.done = true;
                return None;
            }
            self.next_tuple = 0;
        }
        let amps = &self.tuples[self.next_tuple];
        self.next_tuple += 1;
        let mut spec = TorusSpectrum::new(self.bandlimit);
        for (&c, &v) in self.combo.iter().zip(amps) {
            spec.insert(self.freqs[c], v).expect("frequency within bandlimit");
        }
        Some(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GranularConfig {
    pub bandlimit: u64,
    pub k: usize,
    pub eta: f64,
    pub delta: f64,
    /// Acceptance radius; the schedule's constants are unspecified, so it is supplied directly.
    pub epsilon: f64,
    /// C in `m = C·k·ln(F/η)/δ²`.
    pub sample_constant: f64,
    pub samples: Option<usize>,
    pub guard: u128,
    /// Grid size for the post-acceptance separation certificate; 0 disables it.
    pub certificate_grid: usize,
    pub seed: u64,
}

impl Default for GranularConfig {
    fn default() -> Self {
        GranularConfig {
            bandlimit: 8,
            k: 2,
            eta: 0.5,
            delta: 0.2,
            epsilon: 1e-4,
            sample_constant: 4.0,
            samples: None,
            guard: DEFAULT_GUARD,
            certificate_grid: 0,
            seed: 0,
        }
    }
}

impl GranularConfig {
    pub fn grid(&self) -> Result<GranularGrid> {
        GranularGrid::new(self.bandlimit, self.k, self.eta)
    }

    pub fn sample_count(&self) -> usize {
        self.samples.unwrap_or_else(|| {
            let l = (self.bandlimit.max(1) as f64 / self.eta).ln().max(1.0);
            (self.sample_constant * self.k as f64 * l / (self.delta * self.delta)).ceil() as usize
        })
    }

    /// Candidates are rejected once this many points disagree by at least ε.
    pub fn reject_at(&self, m: usize) -> f64 {
        (0.5 - self.delta / 2.0) * m as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParam(format!("delta = {} outside (0, 1)", self.delta)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParam("epsilon must be positive".into()));
        }
        if !(self.sample_constant > 0.0) {
            return Err(Error::InvalidParam("sample constant must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub candidates: usize,
    /// Largest grid fraction where `|g − f| ≤ 2ε` over candidates `g ≠ f`.
    pub worst_fraction: f64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct GranularOutcome {
    pub spectrum: Option<TorusSpectrum>,
    pub checked: usize,
    pub samples: usize,
    pub bad_points: usize,
    pub certificate: Option<SeparationReport>,
    pub diagnostic: Option<String>,
}

fn count_bad(g: &TorusSpectrum, ts: &[f64], ys: &[Complex64], eps: f64, stop: usize) -> usize {
    let mut bad = 0;
    for (&t, &y) in ts.iter().zip(ys) {
        if (g.eval(t) - y).norm() >= eps {
            bad += 1;
            if bad >= stop {
                break;
            }
        }
    }
    bad
}

/// Returns the first enumerated candidate that disagrees by at least ε on fewer than
/// `(1/2 − δ/2)·m` of the sampled points.
pub fn granular_decode(y: &dyn Fn(f64) -> Complex64, cfg: &GranularConfig) -> Result<GranularOutcome> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let candidates = grid.enumerate(cfg.guard)?;
    let m = cfg.sample_count();
    let mut rng = stream(cfg.seed, &[TAG_POINTS]);
    let ts: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let ys: Vec<Complex64> = ts.iter().map(|&t| y(t)).collect();
    let limit = cfg.reject_at(m);
    let stop = limit.ceil() as usize;
    let mut out =
        GranularOutcome { spectrum: None, checked: 0, samples: m, bad_points: 0, certificate: None, diagnostic: None };
    for g in candidates {
        out.checked += 1;
        let bad = count_bad(&g, &ts, &ys, cfg.epsilon, stop.max(1));
        if (bad as f64) < limit {
            debug!("accepted candidate {} with {bad} bad points", out.checked);
            out.bad_points = bad;
            if cfg.certificate_grid > 0 {
                out.certificate = Some(separation_certificate(&g, &grid, cfg.epsilon, cfg.delta, cfg.certificate_grid, cfg.guard)?);
            }
            out.spectrum = Some(g);
            return Ok(out);
        }
    }
    out.diagnostic = Some("no candidate accepted; noise outside the model".into());
    Ok(out)
}

/// Grid check that every other candidate stays `2ε` away from `f` on all but a `δ/4` fraction.
pub fn separation_certificate(
    f: &TorusSpectrum,
    grid: &GranularGrid,
    eps: f64,
    delta: f64,
    points: usize,
    guard: u128,
) -> Result<SeparationReport> {
    if points == 0 {
        return Err(Error::InvalidParam("grid size must be positive".into()));
    }
    let ts: Vec<f64> = (0..points).map(|j| j as f64 / points as f64).collect();
    let fv: Vec<Complex64> = ts.iter().map(|&t| f.eval(t)).collect();
    let mut worst = 0.0f64;
    let mut candidates = 0;
    for g in grid.enumerate(guard)? {
        if &g == f {
            continue;
        }
        candidates += 1;
        let close = ts.iter().zip(&fv).filter(|(&t, &v)| (g.eval(t) - v).norm() <= 2.0 * eps).count();
        worst = worst.max(close as f64 / points as f64);
    }
    Ok(SeparationReport { candidates, worst_fraction: worst, holds: worst <= delta / 4.0 })
}

/// Fraction of the grid `{j/N}` where `|f| ≤ τ`.
pub fn anticoncentration_probe(spec: &TorusSpectrum, tau: f64, grid_size: usize) -> Result<f64> {
    if grid_size < 1000 {
        return Err(Error::InvalidParam(format!("grid size {grid_size} below 1000")));
    }
    let hits = (0..grid_size).filter(|&j| spec.eval(j as f64 / grid_size as f64).norm() <= tau).count();
    Ok(hits as f64 / grid_size as f64)
}

/// `C_α = (1/(1−α))^{(1−α)/2}`.
pub fn c_alpha(alpha: f64) -> f64 {
    (1.0 / (1.0 - alpha)).powf((1.0 - alpha) / 2.0)
}

/// Level below which a normalized signal with smallest coefficient `η` spends at most an `α` fraction
/// of time: `(η/C_α)^{1/α}`.
pub fn anticoncentration_level(eta: f64, alpha: f64) -> f64 {
    (eta / c_alpha(alpha)).powf(1.0 / alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// `log|P(0)|` against the trapezoid mean of `log|P(e^{iθ})|`, where `P(z) = Σ v_j z^{ξ_j − ξ₁}`.
pub fn jensen_check(spec: &TorusSpectrum, nodes: usize) -> Result<JensenReport> {
    if nodes == 0 {
        return Err(Error::InvalidParam("need at least one quadrature node".into()));
    }
    let (&low, &v0) = spec.iter().next().ok_or(Error::Empty("spectrum"))?;
    if v0.norm() == 0.0 {
        return Err(Error::InvalidParam("P(0) = 0".into()));
    }
    let lhs = v0.norm().ln();
    let mut acc = 0.0;
    for j in 0..nodes {
        let t = j as f64 / nodes as f64;
        let p: Complex64 = spec.iter().map(|(&xi, &c)| c * character(xi - low, t)).sum();
        acc += p.norm().ln();
    }
    let rhs = acc / nodes as f64;
    Ok(JensenReport { lhs, rhs, slack: rhs - lhs })
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Largest order accepted by [`counterexample_signal`].
pub const COUNTEREXAMPLE_MAX_K: usize = 60;

/// Normalized `(1 + e^{2πit})^k`: coefficients `C(k, j)/√C(2k, k)` at `j = 0..k`.
pub fn counterexample_signal(k: usize) -> Result<TorusSpectrum> {
    if k > COUNTEREXAMPLE_MAX_K {
        return Err(Error::InvalidParam(format!("k = {k} above {COUNTEREXAMPLE_MAX_K}")));
    }
    let norm = binomial_f64(2 * k, k).sqrt();
    TorusSpectrum::from_entries(
        k as u64,
        (0..=k).map(|j| (j as i64, Complex64::new(binomial_f64(k, j) / norm, 0.0))),
    )
}

/// `√2·k^{1/4}·sin^k(πα/2)`: the bound `√2·k^{1/4}·|cos πt|^k` at the edge of the middle interval of
/// length `α`, so the normalized counterexample lies below it on at least that fraction.
pub fn counterexample_level(k: usize, alpha: f64) -> f64 {
    2f64.sqrt() * (k as f64).powf(0.25) * (PI * alpha / 2.0).sin().powi(k as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_candidates() {
        let g = GranularGrid::new(1, 1, 1.0).unwrap();
        assert_eq!(g.count(), 12);
        let all: Vec<TorusSpectrum> = g.enumerate(DEFAULT_GUARD).unwrap().collect();
        assert_eq!(all.len(), 12);
        assert_eq!(all[0].support(), vec![-1]);
        assert_eq!(all[0].get(-1), Complex64::new(-1.0, 0.0));
        assert_eq!(all[1].get(-1), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn coarse_eta_is_empty() {
        let g = GranularGrid::new(3, 1, 1.5).unwrap();
        assert_eq!(g.count(), 0);
        assert_eq!(g.enumerate(DEFAULT_GUARD).unwrap().count(), 0);
    }

    #[test]
    fn guard_trips() {
        let g = GranularGrid::new(100, 3, 0.1).unwrap();
        assert!(matches!(g.enumerate(DEFAULT_GUARD), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn small_counterexamples() {
        let s = counterexample_signal(2).unwrap();
        let r6 = 6f64.sqrt();
        assert!((s.get(1).re - 2.0 / r6).abs() < 1e-15);
        assert!((s.get(0).re - 1.0 / r6).abs() < 1e-15);
        assert!(counterexample_signal(61).is_err());
    }

    #[test]
    fn jensen_equality_without_interior_roots() {
        let one = TorusSpectrum::from_entries(0, [(0, Complex64::new(1.0, 0.0))]).unwrap();
        let r = jensen_check(&one, 64).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }
}
