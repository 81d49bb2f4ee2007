//! Linear-program decoding of a k-sparse spectrum from outlier-corrupted samples.

use std::collections::HashMap;

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{l1_regression, ComplexNorm, LpStatus, Samples, Simplex, SimplexOptions, SpectralL1Lp};
use crate::rng::SimRng;
use crate::spectral::FreqVec;

/// Characters indexed `0..num_chars` over a sampleable domain.
pub trait CharacterSystem {
    type Point: Clone;
    fn num_chars(&self) -> usize;
    fn is_complex(&self) -> bool;
    fn sample_point(&self, rng: &mut SimRng) -> Self::Point;
    fn row(&self, p: &Self::Point) -> Vec<Complex64>;
}

/// A set of characters of {0,1}^n, in lexicographic order.
#[derive(Clone, Debug)]
pub struct BooleanChars {
    n: usize,
    chars: Vec<FreqVec>,
}

impl BooleanChars {
    pub fn new(n: usize, mut chars: Vec<FreqVec>) -> Result<Self> {
        if let Some(bad) = chars.iter().find(|c| c.len() != n) {
            return Err(Error::Dimension { expected: n, got: bad.len() });
        }
        chars.sort();
        chars.dedup();
        Ok(BooleanChars { n, chars })
    }

    /// All `2^n` characters.
    pub fn full(n: usize) -> Self {
        let mut chars: Vec<FreqVec> = (0..1u64 << n).map(|i| FreqVec::from_index(n, i)).collect();
        chars.sort();
        BooleanChars { n, chars }
    }

    pub fn chars(&self) -> &[FreqVec] {
        &self.chars
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl CharacterSystem for BooleanChars {
    type Point = FreqVec;
    fn num_chars(&self) -> usize {
        self.chars.len()
    }
    fn is_complex(&self) -> bool {
        false
    }
    fn sample_point(&self, rng: &mut SimRng) -> FreqVec {
        FreqVec::random(self.n, rng)
    }
    fn row(&self, x: &FreqVec) -> Vec<Complex64> {
        self.chars.iter().map(|c| Complex64::new(c.chi(x), 0.0)).collect()
    }
}

/// All characters `x ↦ e^{2πiℓx/B}` of Z_B, indexed by `ℓ`.
#[derive(Clone, Debug)]
pub struct CyclicChars {
    b: u64,
    roots: Vec<Complex64>,
}

impl CyclicChars {
    pub fn new(b: u64) -> Self {
        let roots =
            (0..b).map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / b as f64)).collect();
        CyclicChars { b, roots }
    }

    pub fn modulus(&self) -> u64 {
        self.b
    }
}

impl CharacterSystem for CyclicChars {
    type Point = u64;
    fn num_chars(&self) -> usize {
        self.b as usize
    }
    fn is_complex(&self) -> bool {
        true
    }
    fn sample_point(&self, rng: &mut SimRng) -> u64 {
        rng.gen_range(0..self.b)
    }
    fn row(&self, x: &u64) -> Vec<Complex64> {
        (0..self.b).map(|l| self.roots[((l * x) % self.b) as usize]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeConfig {
    pub k: usize,
    /// Failure probability γ.
    pub gamma: f64,
    /// Gap δ with ρ = 1/2 − δ.
    pub delta: f64,
    /// Coefficient floor η.
    pub eta: f64,
    /// Multiplier C in `m = C·k²·ln|T|·ln(1/γ)/δ²`.
    pub sample_constant: f64,
    /// Δ-grid step; defaults to `m·η·δ/100`.
    pub sigma: Option<f64>,
    /// Fixes m, bypassing the formula.
    pub samples: Option<usize>,
    pub norm: ComplexNorm,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            k: 1,
            gamma: 0.01,
            delta: 0.2,
            eta: 1.0,
            sample_constant: 8.0,
            sigma: None,
            samples: None,
            norm: ComplexNorm::Surrogate,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParam("k must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::InvalidParam(format!("delta = {} outside (0, 1/2]", self.delta)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParam("eta must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParam("gamma must lie in (0, 1)".into()));
        }
        if !(self.sample_constant > 0.0) {
            return Err(Error::InvalidParam("sample constant must be positive".into()));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::InvalidParam("sigma must be positive".into()));
            }
        }
        Ok(())
    }

    /// `m = ⌈C·k²·ln|T|·ln(1/γ)/δ²⌉`, at least `k`.
    pub fn sample_count(&self, num_chars: usize) -> usize {
        if let Some(m) = self.samples {
            return m.max(self.k);
        }
        let k = self.k as f64;
        let t = (num_chars.max(2) as f64).ln();
        let m = self.sample_constant * k * k * t * (1.0 / self.gamma).ln() / (self.delta * self.delta);
        (m.ceil() as usize).max(self.k)
    }

    pub fn sigma_for(&self, m: usize) -> f64 {
        self.sigma.unwrap_or(m as f64 * self.eta * self.delta / 100.0)
    }

    /// Observations beyond this magnitude are clamped.
    pub fn clamp_level(&self) -> f64 {
        1e6 * (1.0 + self.eta * self.k as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub status: String,
    /// Linearized `‖ĝ‖₁` at the LP optimum.
    pub objective: f64,
    pub support: Vec<usize>,
    pub refit_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// `(character index, coefficient)` pairs sorted by index.
    pub coefs: Vec<(usize, Complex64)>,
    pub samples: usize,
    pub delta_star: f64,
    pub residual: f64,
    pub sweep: Vec<SweepPoint>,
    pub clamped: usize,
    pub lp_iterations: usize,
}

impl DecodeResult {
    pub fn support(&self) -> Vec<usize> {
        self.coefs.iter().map(|(j, _)| *j).collect()
    }

    pub fn get(&self, j: usize) -> Complex64 {
        self.coefs.iter().find(|(i, _)| *i == j).map(|(_, c)| *c).unwrap_or_default()
    }
}

/// Draws `m` uniform points, queries them and clamps oversized answers.
pub fn collect_samples<S: CharacterSystem>(
    system: &S,
    oracle: &mut dyn FnMut(&S::Point) -> Complex64,
    m: usize,
    clamp: f64,
    rng: &mut SimRng,
) -> (Samples, usize) {
    let mut design = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    let mut clamped = 0;
    for _ in 0..m {
        let p = system.sample_point(rng);
        let mut v = oracle(&p);
        if !system.is_complex() {
            v.im = 0.0;
        }
        if !v.re.is_finite() || !v.im.is_finite() {
            v = Complex64::new(clamp, 0.0);
            clamped += 1;
        } else if v.norm() > clamp {
            v = v / v.norm() * clamp;
            clamped += 1;
        }
        design.push(system.row(&p));
        y.push(v);
    }
    if clamped > 0 {
        warn!("clamped {clamped} of {m} observations at {clamp}");
    }
    (Samples { design, y, complex: system.is_complex() }, clamped)
}

/// Indices of the `k` largest coefficients, ties broken by index; exact zeros are never selected.
pub fn top_k(coefs: &[Complex64], k: usize) -> Vec<usize> {
    let mag: Vec<f64> = coefs.iter().map(|c| c.norm_sqr()).collect();
    let mut idx: Vec<usize> = (0..coefs.len()).filter(|&j| mag[j] > 1e-18).collect();
    idx.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

type Refit = (Vec<Complex64>, f64);

fn refit(samples: &Samples, support: &[usize], cache: &mut HashMap<Vec<usize>, Refit>) -> Result<Refit> {
    if let Some(r) = cache.get(support) {
        return Ok(r.clone());
    }
    let r = if support.is_empty() {
        (Vec::new(), samples.residual(&[], ComplexNorm::Surrogate))
    } else {
        let reg = l1_regression(&samples.columns(support))?;
        (reg.coefs, reg.residual)
    };
    cache.insert(support.to_vec(), r.clone());
    Ok(r)
}

/// The Δ-sweep decoder on an already collected sample set.
pub fn linear_decode_samples(samples: &Samples, cfg: &DecodeConfig, clamped: usize) -> Result<DecodeResult> {
    cfg.validate()?;
    let m = samples.m();
    let t = samples.num_chars();
    if t < cfg.k {
        return Err(Error::InvalidParam(format!("|T| = {t} < k = {}", cfg.k)));
    }
    let y_mass: f64 = samples.y.iter().map(|v| samples.abs(*v, cfg.norm)).sum();
    let top = y_mass + cfg.eta * m as f64;
    let sigma = cfg.sigma_for(m);
    let steps = (top / sigma).floor() as usize;
    let lp = SpectralL1Lp::build(samples, steps as f64 * sigma, cfg.norm)?;
    let mut solver = lp.solver()?;
    let mut status = solver.solve();
    let mut cache: HashMap<Vec<usize>, Refit> = HashMap::new();
    let mut sweep = Vec::new();
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    for j in (0..=steps).rev() {
        let delta = j as f64 * sigma;
        if j != steps {
            solver.set_rhs(lp.budget_row, lp.budget_rhs(delta));
            status = solver.reoptimize();
        }
        if status != LpStatus::Optimal {
            if status == LpStatus::Infeasible {
                // the feasible set only shrinks with Δ
                break;
            }
            warn!("budget {delta}: LP {}", status.as_str());
            sweep.push(SweepPoint {
                delta,
                status: status.as_str().into(),
                objective: f64::NAN,
                support: Vec::new(),
                refit_residual: f64::NAN,
            });
            // restart cold at the next budget
            if j > 0 {
                let mut next = lp.problem.clone();
                next.constraints[lp.budget_row].rhs = lp.budget_rhs((j - 1) as f64 * sigma);
                solver = Simplex::new(&next, SimplexOptions::default())?;
                status = solver.solve();
            }
            continue;
        }
        let coefs = lp.coefficients(|v| solver.value(v));
        let support = top_k(&coefs, cfg.k);
        let (_, residual) = refit(samples, &support, &mut cache)?;
        let tie = 1e-12 * (1.0 + residual.abs());
        if best.as_ref().is_none_or(|(r, _, _)| residual <= *r + tie) {
            best = Some((residual, delta, support.clone()));
        }
        sweep.push(SweepPoint {
            delta,
            status: "optimal".into(),
            objective: solver.objective(),
            support,
            refit_residual: residual,
        });
    }
    let Some((residual, delta_star, support)) = best else {
        return Err(Error::SweepFailed);
    };
    let (coefs, _) = refit(samples, &support, &mut cache)?;
    sweep.reverse();
    Ok(DecodeResult {
        coefs: support.into_iter().zip(coefs).collect(),
        samples: m,
        delta_star,
        residual,
        sweep,
        clamped,
        lp_iterations: solver.iterations(),
    })
}

/// Samples `m` points and runs the Δ sweep.
pub fn linear_decode<S: CharacterSystem>(
    oracle: &mut dyn FnMut(&S::Point) -> Complex64,
    system: &S,
    cfg: &DecodeConfig,
    rng: &mut SimRng,
) -> Result<DecodeResult> {
    cfg.validate()?;
    let m = cfg.sample_count(system.num_chars());
    let (samples, clamped) = collect_samples(system, oracle, m, cfg.clamp_level(), rng);
    linear_decode_samples(&samples, cfg, clamped)
}

pub const BRUTEFORCE_GUARD: u128 = 100_000;

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Exhaustive ℓ0-constrained LAD: the best support of size `min(k, |T|)`; a support of size `k` dominates its
/// subsets. Ties go to the first support in lexicographic order.
pub fn k_sparse_bruteforce(samples: &Samples, k: usize) -> Result<DecodeResult> {
    let t = samples.num_chars();
    let k = k.min(t);
    let size = binomial(t as u64, k as u64);
    if size > BRUTEFORCE_GUARD {
        return Err(Error::GuardExceeded { size, guard: BRUTEFORCE_GUARD });
    }
    let mut comb: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<usize>, Vec<Complex64>)> = None;
    loop {
        let reg = if comb.is_empty() {
            (Vec::new(), samples.residual(&[], ComplexNorm::Surrogate))
        } else {
            let r = l1_regression(&samples.columns(&comb))?;
            (r.coefs, r.residual)
        };
        if best.as_ref().is_none_or(|(r, _, _)| reg.1 < *r - 1e-9 * (1.0 + r.abs())) {
            best = Some((reg.1, comb.clone(), reg.0));
        }
        // next combination
        let mut i = k;
        while i > 0 && comb[i - 1] == t - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        comb[i - 1] += 1;
        for j in i..k {
            comb[j] = comb[j - 1] + 1;
        }
    }
    let (residual, support, coefs) = best.expect("at least one support");
    let coefs: Vec<(usize, Complex64)> =
        support.into_iter().zip(coefs).filter(|(_, c)| c.norm() > 1e-9).collect();
    Ok(DecodeResult {
        coefs,
        samples: samples.m(),
        delta_star: f64::NAN,
        residual,
        sweep: Vec::new(),
        clamped: 0,
        lp_iterations: 0,
    })
}
