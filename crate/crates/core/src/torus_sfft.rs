//! Sparse recovery on the torus: hash frequencies into Z_B and pin each one down by phase doubling.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use log::{debug, warn};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decode::{linear_decode, CyclicChars, DecodeConfig};
use crate::error::{Error, Result};
use crate::lp::{l1_regression, Samples};
use crate::rng::{stream, SimRng};
use crate::spectral::{character, TorusSpectrum};

const TAG_PRIME: u64 = 0x71;
const TAG_ROUND: u64 = 0x72;
const TAG_REFIT: u64 = 0x73;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TorusSfftConfig {
    pub bandlimit: u64,
    pub k: usize,
    pub delta: f64,
    pub eta: f64,
    /// Smallest admissible modulus is the first prime above this; defaults to `max(2k·log₂2F, 4k²)`.
    pub prime_floor: Option<u64>,
    pub prime_pool_size: usize,
    /// Per-bucket decoder settings; `k`, `delta`, `eta` and `gamma` are filled in by the driver.
    pub inner: DecodeConfig,
    /// C in the refit sample count `C·k²/δ²`.
    pub refit_constant: f64,
    pub refit_samples: Option<usize>,
    pub seed: u64,
}

impl Default for TorusSfftConfig {
    fn default() -> Self {
        TorusSfftConfig {
            bandlimit: 64,
            k: 1,
            delta: 0.25,
            eta: 1.0,
            prime_floor: None,
            prime_pool_size: 1000,
            inner: DecodeConfig::default(),
            refit_constant: 4.0,
            refit_samples: None,
            seed: 0,
        }
    }
}

/// `⌈log₂ 2F⌉`.
pub fn log2_ceil_2f(f: u64) -> u32 {
    (2 * f.max(1)).next_power_of_two().trailing_zeros()
}

/// The floor `(k·log₂F/δ)^10` under which the isolation argument is stated; far beyond desk scale.
pub fn theoretical_prime_floor(k: usize, bandlimit: u64, delta: f64) -> f64 {
    (k as f64 * (bandlimit.max(2) as f64).log2() / delta).powi(10)
}

impl TorusSfftConfig {
    pub fn floor(&self) -> u64 {
        self.prime_floor.unwrap_or_else(|| {
            let k = self.k as u64;
            (2 * k * log2_ceil_2f(self.bandlimit) as u64).max(4 * k * k)
        })
    }

    /// Rounds of phase doubling: `⌈log₂ 2F⌉ + 1`, so the last round runs at `Δ = 1/2`.
    pub fn rounds(&self) -> u32 {
        log2_ceil_2f(self.bandlimit) + 1
    }

    pub fn inner_config(&self) -> DecodeConfig {
        DecodeConfig {
            k: self.k,
            delta: self.delta,
            eta: self.eta,
            gamma: 1e-3 / (self.k as f64 * log2_ceil_2f(self.bandlimit).max(1) as f64),
            ..self.inner
        }
    }

    pub fn refit_count(&self) -> usize {
        self.refit_samples.unwrap_or_else(|| {
            let k = self.k as f64;
            (self.refit_constant * k * k / (self.delta * self.delta)).ceil() as usize
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandlimit == 0 || self.bandlimit > 1 << 40 {
            return Err(Error::InvalidParam(format!("bandlimit {} outside 1..=2^40", self.bandlimit)));
        }
        if self.prime_pool_size == 0 {
            return Err(Error::EmptyPool);
        }
        if !(self.refit_constant > 0.0) {
            return Err(Error::InvalidParam("refit constant must be positive".into()));
        }
        self.inner_config().validate()
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The first `size` primes strictly above `floor`.
pub fn prime_pool(floor: u64, size: usize) -> Result<Vec<u64>> {
    let mut pool = Vec::with_capacity(size);
    let mut p = floor;
    while pool.len() < size {
        p = p.checked_add(1).ok_or(Error::EmptyPool)?;
        if p > 1 << 40 {
            return Err(Error::EmptyPool);
        }
        if is_prime(p) {
            pool.push(p);
        }
    }
    Ok(pool)
}

/// A uniform draw from the prime pool; the modulus must exceed k.
pub fn pick_prime(cfg: &TorusSfftConfig, rng: &mut SimRng) -> Result<u64> {
    let pool = prime_pool(cfg.floor(), cfg.prime_pool_size)?;
    let b = pool[rng.gen_range(0..pool.len())];
    if b <= cfg.k as u64 {
        return Err(Error::InvalidParam(format!("modulus {b} must exceed k = {}", cfg.k)));
    }
    Ok(b)
}

/// Every frequency is alone in its residue class mod `b`.
pub fn isolated_mod(freqs: &[i64], b: u64) -> Vec<bool> {
    let res: Vec<u64> = freqs.iter().map(|&x| x.rem_euclid(b as i64) as u64).collect();
    res.iter().map(|r| res.iter().filter(|s| *s == r).count() == 1).collect()
}

/// Sample grids `z[i] = y(t₀ + i/B)` and `z′[i] = y(t₀ + Δ + i/B)` as cyclic oracles.
pub fn frequency_hash<'a>(
    y: &'a dyn Fn(f64) -> Complex64,
    b: u64,
    delta: f64,
    t0: f64,
) -> (impl Fn(&u64) -> Complex64 + 'a, impl Fn(&u64) -> Complex64 + 'a) {
    let at = move |shift: f64| move |i: &u64| y((t0 + shift + *i as f64 / b as f64).rem_euclid(1.0));
    (at(0.0), at(delta))
}

/// Closed-form hash spectrum: `ℓ ↦ Σ_{ξ ≡ ℓ (mod B)} f̂(ξ)·e^{2πiξt₀}`.
pub fn hash_spectrum(spec: &TorusSpectrum, b: u64, t0: f64) -> BTreeMap<u64, Complex64> {
    let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
    for (&xi, &c) in spec.iter() {
        *out.entry(xi.rem_euclid(b as i64) as u64).or_default() += c * character(xi, t0);
    }
    out
}

/// Principal phase in `[−π, π)`; an exact `±π` is mapped just below `π`.
pub fn phase(z: Complex64) -> f64 {
    let g = z.arg();
    if g.abs() == PI {
        f64::from_bits(PI.to_bits() - 1)
    } else {
        g
    }
}

/// One doubling step for a bucket estimate; `None` when the first coefficient vanishes.
pub fn phase_update(apx: i64, cz: Complex64, cz2: Complex64, delta: f64) -> Option<i64> {
    if cz.norm() == 0.0 || !cz.norm().is_finite() || !cz2.norm().is_finite() {
        return None;
    }
    let rot = Complex64::from_polar(1.0, -2.0 * PI * delta * apx as f64);
    let gamma = phase(rot * cz2 / cz);
    Some(apx + (gamma / (2.0 * PI * delta)).round() as i64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: u32,
    /// Step used in this round.
    pub delta: f64,
    pub t0: f64,
    /// Estimates after the update; `None` marks a discarded bucket.
    pub apx: BTreeMap<u64, Option<i64>>,
}

#[derive(Clone, Debug)]
pub struct TorusSfftOutcome {
    pub spectrum: TorusSpectrum,
    pub modulus: u64,
    pub trace: Vec<RoundTrace>,
    pub inner_samples: usize,
    pub refit_samples: usize,
    pub queries: usize,
    pub diagnostic: Option<String>,
}

impl TorusSfftOutcome {
    /// Live buckets whose estimate is farther than `1/(4Δ)` from the true frequency of that residue, with `Δ`
    /// the step of the following round.
    pub fn induction_violations(&self, truth: &TorusSpectrum) -> usize {
        let b = self.modulus as i64;
        let mut bad = 0;
        for r in &self.trace {
            let next = 2.0 * r.delta;
            for (&res, apx) in &r.apx {
                let Some(apx) = apx else { continue };
                let Some(&xi) = truth.support().iter().find(|x| x.rem_euclid(b) as u64 == res) else {
                    continue;
                };
                if ((xi - apx) as f64).abs() > 1.0 / (4.0 * next) {
                    bad += 1;
                }
            }
        }
        bad
    }
}

/// Runs the hashed phase-doubling decoder and the final ℓ1 refit.
pub fn torus_sfft(y: &dyn Fn(f64) -> Complex64, cfg: &TorusSfftConfig) -> Result<TorusSfftOutcome> {
    cfg.validate()?;
    let f = cfg.bandlimit;
    let b = pick_prime(cfg, &mut stream(cfg.seed, &[TAG_PRIME]))?;
    let system = CyclicChars::new(b);
    let inner = cfg.inner_config();
    let mut apx: BTreeMap<u64, Option<i64>> = BTreeMap::new();
    let mut delta = 1.0 / (4.0 * f as f64);
    let mut trace = Vec::new();
    let mut queries = 0usize;
    let mut inner_samples = 0;
    for round in 0..cfg.rounds() {
        let mut rng = stream(cfg.seed, &[TAG_ROUND, round as u64]);
        let t0 = rng.gen::<f64>() / b as f64;
        let (z, z2) = frequency_hash(y, b, delta, t0);
        let mut count = 0usize;
        let mut q1 = |i: &u64| {
            count += 1;
            z(i)
        };
        let r1 = linear_decode(&mut q1, &system, &inner, &mut rng)?;
        let mut q2 = |i: &u64| {
            count += 1;
            z2(i)
        };
        let r2 = linear_decode(&mut q2, &system, &inner, &mut rng)?;
        queries += count;
        inner_samples = r1.samples;
        let s1: BTreeMap<u64, Complex64> = r1.coefs.iter().map(|(j, c)| (*j as u64, *c)).collect();
        let s2: BTreeMap<u64, Complex64> = r2.coefs.iter().map(|(j, c)| (*j as u64, *c)).collect();
        if round == 0 {
            for key in s1.keys().chain(s2.keys()) {
                apx.insert(*key, Some(0));
            }
        }
        for (key, est) in apx.iter_mut() {
            *est = match (*est, s1.get(key), s2.get(key)) {
                (Some(a), Some(c1), Some(c2)) => phase_update(a, *c1, *c2, delta),
                _ => None,
            };
        }
        debug!("round {round}: Δ = {delta}, estimates {apx:?}");
        trace.push(RoundTrace { round, delta, t0, apx: apx.clone() });
        delta *= 2.0;
    }
    let mut freqs: Vec<i64> =
        apx.values().flatten().copied().filter(|xi| xi.unsigned_abs() <= f).collect();
    freqs.sort_unstable();
    freqs.dedup();
    let mut out = TorusSfftOutcome {
        spectrum: TorusSpectrum::new(f),
        modulus: b,
        trace,
        inner_samples,
        refit_samples: 0,
        queries,
        diagnostic: None,
    };
    if freqs.is_empty() {
        warn!("no bucket survived every round");
        out.diagnostic = Some("empty surviving support".into());
        return Ok(out);
    }
    let m = cfg.refit_count().max(freqs.len());
    let mut rng = stream(cfg.seed, &[TAG_REFIT]);
    let mut design = Vec::with_capacity(m);
    let mut obs = Vec::with_capacity(m);
    for _ in 0..m {
        let t: f64 = rng.gen();
        design.push(freqs.iter().map(|&xi| character(xi, t)).collect());
        obs.push(y(t));
    }
    let fit = l1_regression(&Samples { design, y: obs, complex: true })?;
    for (xi, c) in freqs.iter().zip(fit.coefs) {
        out.spectrum.insert(*xi, c)?;
    }
    out.refit_samples = m;
    out.queries += m;
    Ok(out)
}
