//! Degree-d recovery on {0,1}^n by least-absolute-deviation regression, with the moment and
//! Euclidean-section checks behind it.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decode::binomial;
use crate::error::{Error, Result};
use crate::lp::{l1_regression, Samples};
use crate::rng::{stream, SimRng};
use crate::spectral::{BooleanSpectrum, FreqVec};

const TAG_POINTS: u64 = 0xD1;

/// All characters of weight at most `d`, ordered by weight and then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    n: usize,
    d: usize,
    monos: Vec<FreqVec>,
}

fn combinations(n: usize, w: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<FreqVec>) {
    if cur.len() == w {
        let mut v = FreqVec::zeros(n);
        for &i in cur.iter() {
            v.set(i, true);
        }
        out.push(v);
        return;
    }
    for i in start..n {
        cur.push(i);
        combinations(n, w, i + 1, cur, out);
        cur.pop();
    }
}

/// `Σ_{j≤d} C(n, j)`.
pub fn count_up_to(n: usize, d: usize) -> u128 {
    (0..=d.min(n)).map(|j| binomial(n as u64, j as u64)).sum()
}

impl MonomialBasis {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::InvalidParam(format!("n = {n} outside 1..=63")));
        }
        let size = count_up_to(n, d);
        if size > 1 << 20 {
            return Err(Error::GuardExceeded { size, guard: 1 << 20 });
        }
        let mut monos = Vec::with_capacity(size as usize);
        for w in 0..=d.min(n) {
            let mut layer = Vec::new();
            combinations(n, w, 0, &mut Vec::new(), &mut layer);
            layer.sort();
            monos.extend(layer);
        }
        Ok(MonomialBasis { n, d, monos })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomials(&self) -> &[FreqVec] {
        &self.monos
    }

    pub fn spectrum(&self, coefs: &[f64]) -> Result<BooleanSpectrum> {
        if coefs.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: coefs.len() });
        }
        BooleanSpectrum::from_entries(self.n, self.monos.iter().cloned().zip(coefs.iter().copied()))
    }

    /// Coefficients of `spec` on the basis; characters outside it are rejected.
    pub fn coefficients(&self, spec: &BooleanSpectrum) -> Result<Vec<f64>> {
        if spec.n() != self.n {
            return Err(Error::Dimension { expected: self.n, got: spec.n() });
        }
        if let Some((xi, _)) = spec.iter().find(|(xi, _)| xi.weight() as usize > self.d) {
            return Err(Error::InvalidParam(format!("character {xi} has degree above {}", self.d)));
        }
        Ok(self.monos.iter().map(|xi| spec.get(xi)).collect())
    }
}

/// `(χ_ξ(x))_ξ` over the basis.
pub fn monomial_features(x: &FreqVec, basis: &MonomialBasis) -> Result<Vec<f64>> {
    if x.len() != basis.n {
        return Err(Error::Dimension { expected: basis.n, got: x.len() });
    }
    Ok(basis.monos.iter().map(|xi| xi.chi(x)).collect())
}

fn eval(coefs: &[f64], basis: &MonomialBasis, x: &FreqVec) -> f64 {
    basis.monos.iter().zip(coefs).map(|(xi, c)| c * xi.chi(x)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LowDegConfig {
    pub n: usize,
    pub d: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// C in `m = C·N·ln N/δ²`, N the basis size.
    pub sample_constant: f64,
    pub samples: Option<usize>,
    pub seed: u64,
}

impl Default for LowDegConfig {
    fn default() -> Self {
        LowDegConfig { n: 8, d: 1, delta: 0.01, epsilon: 0.01, sample_constant: 4.0, samples: None, seed: 0 }
    }
}

/// `1/(4·3^{2d})`.
pub fn outlier_threshold(d: usize) -> f64 {
    0.25 / 9f64.powi(d as i32)
}

impl LowDegConfig {
    /// Largest tolerated outlier fraction, `1/(4·3^{2d}) − δ`.
    pub fn rho_bound(&self) -> f64 {
        outlier_threshold(self.d) - self.delta
    }

    pub fn sample_count(&self) -> usize {
        self.samples.unwrap_or_else(|| {
            let big_n = count_up_to(self.n, self.d) as f64;
            (self.sample_constant * big_n * big_n.ln().max(1.0) / (self.delta * self.delta)).ceil() as usize
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParam("delta must be positive".into()));
        }
        if self.rho_bound() <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "delta = {} leaves no outlier budget at degree {}",
                self.delta, self.d
            )));
        }
        if !(self.sample_constant > 0.0) {
            return Err(Error::InvalidParam("sample constant must be positive".into()));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::InvalidParam("epsilon must be nonnegative".into()));
        }
        MonomialBasis::new(self.n, self.d).map(|_| ())
    }
}

#[derive(Clone, Debug)]
pub struct LowDegOutcome {
    pub spectrum: BooleanSpectrum,
    pub coefs: Vec<f64>,
    pub samples: usize,
    pub residual: f64,
    pub non_unique: bool,
}

impl LowDegOutcome {
    /// `(max |ĝ(ξ) − f̂(ξ)|, ‖ĝ − f̂‖₂)`.
    pub fn errors(&self, truth: &BooleanSpectrum) -> (f64, f64) {
        (self.spectrum.linf_distance(truth), self.spectrum.l2_distance(truth))
    }
}

/// LAD fit of the degree-`d` polynomial through the given observations.
pub fn fit_low_degree(points: &[FreqVec], y: &[f64], basis: &MonomialBasis) -> Result<LowDegOutcome> {
    if points.len() != y.len() {
        return Err(Error::Dimension { expected: points.len(), got: y.len() });
    }
    let design = points.iter().map(|x| monomial_features(x, basis)).collect::<Result<Vec<_>>>()?;
    let fit = l1_regression(&Samples::real(design, y.to_vec()))?;
    let coefs: Vec<f64> = fit.coefs.iter().map(|c| c.re).collect();
    Ok(LowDegOutcome {
        spectrum: basis.spectrum(&coefs)?,
        coefs,
        samples: points.len(),
        residual: fit.residual,
        non_unique: fit.non_unique,
    })
}

/// Samples uniform points, queries them and fits the degree-`d` polynomial.
pub fn recover_low_degree(y: &dyn Fn(&FreqVec) -> Complex64, cfg: &LowDegConfig) -> Result<LowDegOutcome> {
    cfg.validate()?;
    let basis = MonomialBasis::new(cfg.n, cfg.d)?;
    let m = cfg.sample_count().max(basis.len());
    let mut rng = stream(cfg.seed, &[TAG_POINTS]);
    let points: Vec<FreqVec> = (0..m).map(|_| FreqVec::random(cfg.n, &mut rng)).collect();
    let obs: Vec<f64> = points.iter().map(|x| y(x).re).collect();
    fit_low_degree(&points, &obs, &basis)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean_abs: f64,
    pub l2: f64,
    pub ratio: f64,
    /// Standard error of `mean_abs`; zero when computed by enumeration.
    pub std_error: f64,
    pub holds: bool,
}

/// Largest `n` for which expectations are computed over the whole cube.
pub const EXACT_MAX_N: usize = 20;

/// `E|p|` against `‖p̂‖₂` and the window `[3^{−d}, 1]`. Exact for `n ≤ 20`, else from `samples`
/// uniform points.
pub fn hypercontractive_lower_bound(
    coefs: &[f64],
    basis: &MonomialBasis,
    samples: usize,
    rng: &mut SimRng,
) -> Result<MomentReport> {
    let spec = basis.spectrum(coefs)?;
    let l2 = spec.l2();
    let (mean_abs, std_error) = if basis.n <= EXACT_MAX_N {
        let table = spec.to_table()?;
        (table.iter().map(|v| v.abs()).sum::<f64>() / table.len() as f64, 0.0)
    } else {
        if samples < 2 {
            return Err(Error::InvalidParam("at least two samples needed above the enumeration limit".into()));
        }
        let vals: Vec<f64> =
            (0..samples).map(|_| eval(coefs, basis, &FreqVec::random(basis.n, rng)).abs()).collect();
        let mean = vals.iter().sum::<f64>() / samples as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        (mean, (var / samples as f64).sqrt())
    };
    let ratio = if l2 > 0.0 { mean_abs / l2 } else { 1.0 };
    let lower = 3f64.powi(-(basis.d as i32));
    let slack = 1e-12 + 3.0 * std_error / l2.max(f64::MIN_POSITIVE);
    Ok(MomentReport { mean_abs, l2, ratio, std_error, holds: ratio >= lower - slack && ratio <= 1.0 + slack })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionReport {
    pub m: usize,
    pub subset: usize,
    /// Mass of the `⌊ρm⌋` largest `|p(x_i)|`.
    pub top_mass: f64,
    pub total_mass: f64,
    /// `Σ_S ≤ (1/2 − δ)·Σ`.
    pub half: bool,
    /// `Σ_S + δ·m·E|p| ≤ Σ_{[m]∖S}`.
    pub gap_mean: bool,
    /// `Σ_S + δ·3^{−d}·m·‖p̂‖₂ ≤ Σ_{[m]∖S}`.
    pub gap_l2: bool,
}

impl SectionReport {
    pub fn passes(&self) -> bool {
        self.half && self.gap_mean && self.gap_l2
    }
}

/// Worst-case outlier subset test: the adversary takes the `⌊ρm⌋` points of largest `|p|`.
pub fn euclidean_section_check(
    coefs: &[f64],
    basis: &MonomialBasis,
    points: &[FreqVec],
    rho: f64,
    delta: f64,
) -> Result<SectionReport> {
    let m = points.len();
    let subset = (rho * m as f64).floor();
    if !(subset >= 1.0) {
        return Err(Error::InvalidParam(format!("rho·m = {} leaves no outlier subset", rho * m as f64)));
    }
    let subset = (subset as usize).min(m);
    let mut vals: Vec<f64> = points.iter().map(|x| eval(coefs, basis, x).abs()).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let top_mass: f64 = vals[..subset].iter().sum();
    let total_mass: f64 = vals.iter().sum();
    let rest = total_mass - top_mass;
    let moments = hypercontractive_lower_bound(coefs, basis, 0, &mut stream(0, &[]))?;
    let lower = 3f64.powi(-(basis.d as i32));
    Ok(SectionReport {
        m,
        subset,
        top_mass,
        total_mass,
        half: top_mass <= (0.5 - delta) * total_mass,
        gap_mean: top_mass + delta * m as f64 * moments.mean_abs <= rest,
        gap_l2: top_mass + delta * lower * m as f64 * moments.l2 <= rest,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub m: usize,
    pub min_eigen: f64,
    pub max_eigen: f64,
    pub within: bool,
}

/// Extreme Rayleigh quotients of `(1/m)·Σ Mon(x_i)Mon(x_i)ᵀ`; equal to `Σ p(x_i)²/(m·E p²)` over all `p`.
pub fn l2_concentration(points: &[FreqVec], basis: &MonomialBasis, epsilon: f64) -> Result<GramReport> {
    let m = points.len();
    if m == 0 {
        return Err(Error::Empty("points"));
    }
    let k = basis.len();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for x in points {
        let f = monomial_features(x, basis)?;
        for a in 0..k {
            for b in a..k {
                gram[(a, b)] += f[a] * f[b];
            }
        }
    }
    for a in 0..k {
        for b in a..k {
            let v = gram[(a, b)] / m as f64;
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let min_eigen = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max_eigen = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GramReport { m, min_eigen, max_eigen, within: min_eigen >= 1.0 - epsilon && max_eigen <= 1.0 + epsilon })
}

/// Uniform points on {0,1}^n.
pub fn uniform_points<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<FreqVec> {
    (0..m).map(|_| FreqVec::random(n, rng)).collect()
}
