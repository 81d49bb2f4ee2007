//! Sparse recovery on {0,1}^n by hashing into 2^ℓ buckets through a random invertible map.

use std::collections::BTreeMap;

use log::{debug, warn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decode::{linear_decode, BooleanChars, CharacterSystem, DecodeConfig, DecodeResult};
use crate::error::{Error, Result};
use crate::lp::{l1_regression, Samples};
use crate::rng::stream;
use crate::spectral::{random_invertible_f2, BooleanSpectrum, F2Matrix, FreqVec};

const TAG_MATRIX: u64 = 0xB1;
const TAG_COORD: u64 = 0xB2;
const TAG_REFIT: u64 = 0xB3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BooleanSfftConfig {
    pub k: usize,
    pub delta: f64,
    pub eta: f64,
    /// Bucket bits; defaults to `2⌈log₂k⌉ + 10`, capped at n.
    pub ell: Option<usize>,
    /// Per-bucket decoder settings; `k`, `delta`, `eta` and `gamma` are filled in by the driver.
    pub inner: DecodeConfig,
    /// C in the refit sample count `C·k²·n/δ²`.
    pub refit_constant: f64,
    pub refit_samples: Option<usize>,
    pub seed: u64,
}

impl Default for BooleanSfftConfig {
    fn default() -> Self {
        BooleanSfftConfig {
            k: 1,
            delta: 0.2,
            eta: 1.0,
            ell: None,
            inner: DecodeConfig::default(),
            refit_constant: 0.25,
            refit_samples: None,
            seed: 0,
        }
    }
}

pub fn ceil_log2(k: usize) -> usize {
    k.max(1).next_power_of_two().trailing_zeros() as usize
}

impl BooleanSfftConfig {
    pub fn ell_for(&self, n: usize) -> usize {
        self.ell.unwrap_or(2 * ceil_log2(self.k) + 10).min(n)
    }

    pub fn inner_for(&self, n: usize) -> DecodeConfig {
        DecodeConfig {
            k: self.k,
            delta: self.delta,
            eta: self.eta,
            gamma: 1e-3 / (self.k * n.max(1)) as f64,
            ..self.inner
        }
    }

    pub fn refit_count(&self, n: usize) -> usize {
        self.refit_samples.unwrap_or_else(|| {
            let k = self.k as f64;
            (self.refit_constant * k * k * n as f64 / (self.delta * self.delta)).ceil() as usize
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 || n > 63 {
            return Err(Error::InvalidParam(format!("n = {n} outside 1..=63")));
        }
        let ell = self.ell_for(n);
        if ell == 0 || (1usize << ell) < 2 * self.k.max(1) && ell < n {
            return Err(Error::InvalidParam(format!("ell = {ell} too small for k = {}", self.k)));
        }
        if ell > 20 {
            return Err(Error::InvalidParam(format!("ell = {ell} gives more than 2^20 buckets")));
        }
        if !(self.refit_constant > 0.0) {
            return Err(Error::InvalidParam("refit constant must be positive".into()));
        }
        self.inner_for(n).validate()
    }
}

/// `A·(u ‖ 0^{n−ℓ}) + b`.
pub fn lift_point(a: &F2Matrix, b: &FreqVec, u: &FreqVec) -> Result<FreqVec> {
    let mut x = a.mul_vec(&u.extend_to(a.cols()))?;
    x.xor_assign(b);
    Ok(x)
}

/// The bucket oracle on {0,1}^ℓ; the `2^{n−ℓ}` filter scale is left out.
pub fn filtered_bucket_oracle<'a>(
    y: &'a dyn Fn(&FreqVec) -> Complex64,
    a: &'a F2Matrix,
    b: &'a FreqVec,
) -> impl Fn(&FreqVec) -> Complex64 + 'a {
    move |u| y(&lift_point(a, b, u).expect("bucket point length"))
}

/// Closed-form bucket spectrum: `ζ ↦ Σ_{(Aᵀξ)_{[ℓ]} = ζ} (−1)^{⟨b,ξ⟩} f̂(ξ)`.
pub fn bucket_spectrum(spec: &BooleanSpectrum, a: &F2Matrix, b: &FreqVec, ell: usize) -> Result<BooleanSpectrum> {
    let at = a.transpose();
    let mut out = BooleanSpectrum::new(ell);
    for (xi, c) in spec.iter() {
        let key = at.mul_vec(xi)?.prefix(ell);
        out.accumulate(key, if b.dot(xi) { -*c } else { *c })?;
    }
    Ok(out)
}

/// Whether each frequency has a bucket of its own.
pub fn check_isolation(a: &F2Matrix, freqs: &[FreqVec], ell: usize) -> Result<Vec<bool>> {
    let at = a.transpose();
    let keys = freqs.iter().map(|xi| Ok(at.mul_vec(xi)?.prefix(ell))).collect::<Result<Vec<_>>>()?;
    let mut count: BTreeMap<&FreqVec, usize> = BTreeMap::new();
    for key in &keys {
        *count.entry(key).or_default() += 1;
    }
    Ok(keys.iter().map(|key| count[key] == 1).collect())
}

/// Frequency bits learned for one bucket; `None` bits are still undetermined.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListEntry {
    pub bucket: FreqVec,
    /// `None` once the entry is discarded.
    pub bits: Option<Vec<Option<bool>>>,
}

impl ListEntry {
    pub fn new(bucket: FreqVec, n: usize) -> Self {
        ListEntry { bucket, bits: Some(vec![None; n]) }
    }

    pub fn is_null(&self) -> bool {
        self.bits.is_none()
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        if let Some(bits) = self.bits.as_mut() {
            bits[i] = Some(bit);
        }
    }

    pub fn nullify(&mut self) {
        self.bits = None;
    }

    pub fn finalized(&self) -> Option<FreqVec> {
        let bits = self.bits.as_ref()?;
        let bools: Option<Vec<bool>> = bits.iter().copied().collect();
        bools.map(|b| FreqVec::from_bools(&b))
    }

    /// `{0,1,*}` rendering, or `null`.
    pub fn render(&self) -> String {
        match &self.bits {
            None => "null".into(),
            Some(bits) => bits
                .iter()
                .map(|b| match b {
                    Some(true) => '1',
                    Some(false) => '0',
                    None => '*',
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BooleanSfftOutcome {
    pub spectrum: BooleanSpectrum,
    pub ell: usize,
    pub entries: Vec<ListEntry>,
    pub matrix_draws: usize,
    pub inner_samples: usize,
    pub refit_samples: usize,
    pub queries: usize,
    pub diagnostic: Option<String>,
}

fn sign_of(c: Complex64) -> Option<bool> {
    if c.re > 0.0 {
        Some(true)
    } else if c.re < 0.0 {
        Some(false)
    } else {
        None
    }
}

/// Runs the bucketed sign decoder and the final ℓ1 refit.
pub fn boolean_sfft(y: &dyn Fn(&FreqVec) -> Complex64, n: usize, cfg: &BooleanSfftConfig) -> Result<BooleanSfftOutcome> {
    cfg.validate(n)?;
    let ell = cfg.ell_for(n);
    let inner = cfg.inner_for(n);
    let system = BooleanChars::full(ell);
    let mut rng = stream(cfg.seed, &[TAG_MATRIX]);
    let (a, matrix_draws) = random_invertible_f2(n, &mut rng)?;
    let mut list: BTreeMap<FreqVec, ListEntry> = BTreeMap::new();
    let mut queries = 0usize;
    let mut inner_samples = 0usize;
    let mut first = true;
    for i in 0..n {
        let mut rng = stream(cfg.seed, &[TAG_COORD, i as u64]);
        let b = FreqVec::random(n, &mut rng);
        let mut b2 = b.clone();
        b2.flip(i);
        let mut decode = |shift: &FreqVec, rng: &mut _| -> Result<DecodeResult> {
            let z = filtered_bucket_oracle(y, &a, shift);
            let mut count = |u: &FreqVec| {
                queries += 1;
                z(u)
            };
            linear_decode(&mut count, &system, &inner, rng)
        };
        let r1 = decode(&b, &mut rng)?;
        let r2 = decode(&b2, &mut rng)?;
        inner_samples = r1.samples;
        let s1: BTreeMap<FreqVec, Complex64> =
            r1.coefs.iter().map(|(j, c)| (system.chars()[*j].clone(), *c)).collect();
        let s2: BTreeMap<FreqVec, Complex64> =
            r2.coefs.iter().map(|(j, c)| (system.chars()[*j].clone(), *c)).collect();
        if first {
            // buckets are opened by the first coordinate round only; later arrivals cannot be completed
            for key in s1.keys().chain(s2.keys()) {
                list.entry(key.clone()).or_insert_with(|| ListEntry::new(key.clone(), n));
            }
            first = false;
        }
        for (key, entry) in list.iter_mut() {
            match (s1.get(key).and_then(|c| sign_of(*c)), s2.get(key).and_then(|c| sign_of(*c))) {
                (Some(p), Some(q)) => entry.set(i, p != q),
                _ => entry.nullify(),
            }
        }
        debug!("coordinate {i}: {} live buckets", list.values().filter(|e| !e.is_null()).count());
    }
    let entries: Vec<ListEntry> = list.into_values().collect();
    let mut freqs: Vec<FreqVec> = entries.iter().filter_map(|e| e.finalized()).collect();
    freqs.sort();
    freqs.dedup();
    let refit_m = cfg.refit_count(n).max(freqs.len());
    let mut out = BooleanSfftOutcome {
        spectrum: BooleanSpectrum::new(n),
        ell,
        entries,
        matrix_draws,
        inner_samples,
        refit_samples: 0,
        queries,
        diagnostic: None,
    };
    if freqs.is_empty() {
        warn!("no bucket survived every coordinate round");
        out.diagnostic = Some("empty finalized list".into());
        return Ok(out);
    }
    let chars = BooleanChars::new(n, freqs)?;
    let mut rng = stream(cfg.seed, &[TAG_REFIT]);
    let mut design = Vec::with_capacity(refit_m);
    let mut obs = Vec::with_capacity(refit_m);
    for _ in 0..refit_m {
        let x = chars.sample_point(&mut rng);
        obs.push(Complex64::new(y(&x).re, 0.0));
        design.push(chars.row(&x));
    }
    let fit = l1_regression(&Samples { design, y: obs, complex: false })?;
    for (xi, c) in chars.chars().iter().zip(&fit.coefs) {
        out.spectrum.insert(xi.clone(), c.re)?;
    }
    out.refit_samples = refit_m;
    out.queries += refit_m;
    Ok(out)
}
