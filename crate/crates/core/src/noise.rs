//! Query oracles with (ρ, ε) outlier noise.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, splitmix64, stream, unit_from_bits, SimRng};
use crate::spectral::{BooleanSpectrum, FreqVec, TorusSpectrum};

/// Resolution of the adversarial predicate on the torus.
pub const TORUS_BITS: u32 = 40;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Every query independently is an outlier with probability ρ.
    #[default]
    Random,
    /// Outlier status is a seeded coin per point: repeated queries agree.
    RandomPerPoint,
    /// A fixed seeded set covering at most a ρ fraction of the domain is corrupted.
    Adversarial,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InlierStrategy {
    #[default]
    Uniform,
    /// Error of size ε pushing against the signal.
    WorstSign,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierStrategy {
    /// `10·‖f̂‖₁`.
    #[default]
    LargeConstant,
    Zero,
    /// The value of a second signal.
    Decoy,
}

impl OutlierStrategy {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "large-constant" => Ok(OutlierStrategy::LargeConstant),
            "zero" => Ok(OutlierStrategy::Zero),
            "decoy" => Ok(OutlierStrategy::Decoy),
            _ => Err(Error::Unknown { kind: "outlier strategy", name: name.to_string() }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OutlierStrategy::LargeConstant => "large-constant",
            OutlierStrategy::Zero => "zero",
            OutlierStrategy::Decoy => "decoy",
        }
    }
}

pub fn outlier_strategies() -> [OutlierStrategy; 3] {
    [OutlierStrategy::LargeConstant, OutlierStrategy::Zero, OutlierStrategy::Decoy]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseParams {
    pub rho: f64,
    pub epsilon: f64,
    pub model: NoiseModel,
    pub inlier: InlierStrategy,
    pub outlier: OutlierStrategy,
    pub seed: u64,
    pub log_responses: bool,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            rho: 0.0,
            epsilon: 0.0,
            model: NoiseModel::Random,
            inlier: InlierStrategy::Uniform,
            outlier: OutlierStrategy::LargeConstant,
            seed: 0,
            log_responses: false,
        }
    }
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn new(rho: f64, epsilon: f64, model: NoiseModel, outlier: OutlierStrategy, seed: u64) -> Self {
        NoiseParams { rho, epsilon, model, outlier, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidParam(format!("rho = {} must lie in [0, 1)", self.rho)));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::InvalidParam(format!("epsilon = {} must be nonnegative", self.epsilon)));
        }
        Ok(())
    }
}

/// A ground-truth function on a query domain.
pub trait Signal<P>: Send + Sync {
    fn eval(&self, p: &P) -> Complex64;
    /// `‖f̂‖₁`.
    fn l1(&self) -> f64;
    fn is_real(&self) -> bool;
}

impl Signal<FreqVec> for BooleanSpectrum {
    fn eval(&self, p: &FreqVec) -> Complex64 {
        Complex64::new(self.eval(p).expect("query length matches spectrum"), 0.0)
    }
    fn l1(&self) -> f64 {
        BooleanSpectrum::l1(self)
    }
    fn is_real(&self) -> bool {
        true
    }
}

impl Signal<f64> for TorusSpectrum {
    fn eval(&self, t: &f64) -> Complex64 {
        TorusSpectrum::eval(self, *t)
    }
    fn l1(&self) -> f64 {
        TorusSpectrum::l1(self)
    }
    fn is_real(&self) -> bool {
        false
    }
}

/// Domain points an oracle can answer.
pub trait QueryPoint: Clone + Send {
    /// Bits of the discretized domain used by the adversarial predicate.
    fn domain_bits(&self) -> u32;
    fn discretize(&self) -> u64;
    fn torus_coord(&self) -> Option<f64> {
        None
    }
    fn label(&self) -> String;
}

impl QueryPoint for FreqVec {
    fn domain_bits(&self) -> u32 {
        self.len().min(64) as u32
    }
    fn discretize(&self) -> u64 {
        if self.len() <= 64 {
            self.to_index()
        } else {
            self.words().iter().fold(0u64, |h, &w| splitmix64(h ^ w))
        }
    }
    fn label(&self) -> String {
        self.to_bitstring()
    }
}

impl QueryPoint for f64 {
    fn domain_bits(&self) -> u32 {
        TORUS_BITS
    }
    fn discretize(&self) -> u64 {
        let t = self.rem_euclid(1.0);
        ((t * (1u64 << TORUS_BITS) as f64).floor() as u64) & ((1u64 << TORUS_BITS) - 1)
    }
    fn torus_coord(&self) -> Option<f64> {
        Some(self.rem_euclid(1.0))
    }
    fn label(&self) -> String {
        format!("{self:.17}")
    }
}

/// Seeded bijection of `{0, …, 2^bits − 1}`.
pub fn permute_bits(x: u64, bits: u32, key: u64) -> u64 {
    let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let shift = (bits / 2).max(1);
    let mut x = (x ^ key) & mask;
    for r in 0..4u64 {
        let k = splitmix64(key ^ r);
        x = x.wrapping_mul(k | 1) & mask;
        x ^= x >> shift;
        x = x.wrapping_add(k >> 7) & mask;
    }
    x
}

/// Whether the adversarial predicate corrupts a point: the seeded bijection maps it below `⌊ρ·2^bits⌋`.
pub fn adversarial_corrupt<P: QueryPoint>(p: &P, rho: f64, seed: u64) -> bool {
    let bits = p.domain_bits();
    let total = if bits >= 64 { u64::MAX as f64 } else { (1u64 << bits) as f64 };
    let budget = (rho * total).floor() as u64;
    permute_bits(p.discretize(), bits, derive_seed(seed, &[0xAD]) ) < budget
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleStats {
    pub query_count: u64,
    pub outlier_count: u64,
    /// Minimum circular distance between distinct queries; torus only.
    pub min_separation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub point: String,
    pub re: f64,
    pub im: f64,
    pub outlier: bool,
}

#[derive(Debug)]
struct State {
    rng: SimRng,
    stats: OracleStats,
    log: Vec<Response>,
    torus: BTreeSet<u64>,
    min_gap: f64,
}

/// Thread-safe noisy oracle. Only the statistics log is shared mutable state.
pub struct Oracle<P: QueryPoint> {
    truth: Arc<dyn Signal<P>>,
    decoy: Option<Arc<dyn Signal<P>>>,
    params: NoiseParams,
    state: Mutex<State>,
}

impl<P: QueryPoint> Oracle<P> {
    pub fn new(truth: Arc<dyn Signal<P>>, params: NoiseParams) -> Result<Self> {
        Self::with_decoy(truth, None, params)
    }

    pub fn with_decoy(
        truth: Arc<dyn Signal<P>>,
        decoy: Option<Arc<dyn Signal<P>>>,
        params: NoiseParams,
    ) -> Result<Self> {
        params.validate()?;
        if params.outlier == OutlierStrategy::Decoy && decoy.is_none() {
            return Err(Error::InvalidParam("decoy strategy needs a decoy signal".into()));
        }
        Ok(Oracle {
            truth,
            decoy,
            params,
            state: Mutex::new(State {
                rng: stream(params.seed, &[0x0A]),
                stats: OracleStats::default(),
                log: Vec::new(),
                torus: BTreeSet::new(),
                min_gap: f64::INFINITY,
            }),
        })
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    pub fn truth(&self, p: &P) -> Complex64 {
        self.truth.eval(p)
    }

    fn outlier_value(&self, p: &P) -> Complex64 {
        match self.params.outlier {
            OutlierStrategy::LargeConstant => Complex64::new(10.0 * self.truth.l1(), 0.0),
            OutlierStrategy::Zero => Complex64::new(0.0, 0.0),
            OutlierStrategy::Decoy => self.decoy.as_ref().map(|d| d.eval(p)).unwrap_or_default(),
        }
    }

    fn inlier_error(&self, rng: &mut SimRng, f: Complex64) -> Complex64 {
        let eps = self.params.epsilon;
        if eps == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let real = self.truth.is_real();
        match self.params.inlier {
            InlierStrategy::Uniform if real => Complex64::new(rng.gen_range(-eps..=eps), 0.0),
            InlierStrategy::Uniform => loop {
                let z = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                if z.norm_sqr() <= 1.0 {
                    break z * eps;
                }
            },
            InlierStrategy::WorstSign => {
                if f.norm() == 0.0 {
                    Complex64::new(eps, 0.0)
                } else if real {
                    Complex64::new(-eps * f.re.signum(), 0.0)
                } else {
                    -f / f.norm() * eps
                }
            }
        }
    }

    pub fn query(&self, p: &P) -> Complex64 {
        let f = self.truth.eval(p);
        let mut st = self.state.lock().expect("oracle lock");
        let outlier = match self.params.model {
            NoiseModel::Random => self.params.rho > 0.0 && st.rng.gen::<f64>() < self.params.rho,
            NoiseModel::RandomPerPoint => {
                unit_from_bits(derive_seed(self.params.seed, &[0xB0, p.discretize()])) < self.params.rho
            }
            NoiseModel::Adversarial => adversarial_corrupt(p, self.params.rho, self.params.seed),
        };
        let value = if outlier { self.outlier_value(p) } else { f + self.inlier_error(&mut st.rng, f) };
        st.stats.query_count += 1;
        if outlier {
            st.stats.outlier_count += 1;
        }
        if let Some(t) = p.torus_coord() {
            let key = t.to_bits();
            let prev = st.torus.range(..=key).next_back().copied();
            let next = st.torus.range(key..).next().copied();
            for nb in prev.into_iter().chain(next) {
                let gap = (f64::from_bits(nb) - t).abs();
                st.min_gap = st.min_gap.min(gap);
            }
            st.torus.insert(key);
        }
        if self.params.log_responses {
            st.log.push(Response { point: p.label(), re: value.re, im: value.im, outlier });
        }
        value
    }

    pub fn stats(&self) -> OracleStats {
        let st = self.state.lock().expect("oracle lock");
        let mut stats = st.stats.clone();
        if st.torus.len() >= 2 {
            let first = f64::from_bits(*st.torus.iter().next().unwrap());
            let last = f64::from_bits(*st.torus.iter().next_back().unwrap());
            stats.min_separation = Some(st.min_gap.min(first + 1.0 - last));
        } else if st.stats.query_count >= 2 && st.min_gap.is_finite() {
            stats.min_separation = Some(st.min_gap);
        }
        stats
    }

    pub fn log(&self) -> Vec<Response> {
        self.state.lock().expect("oracle lock").log.clone()
    }
}
