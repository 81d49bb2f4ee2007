//! Seeded multi-trial experiments: ground truth, noisy oracle, decoder, report.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolean_sfft::{boolean_sfft, BooleanSfftConfig};
use crate::error::{Error, Result};
use crate::granular::{granular_decode, GranularConfig};
use crate::lab::quantile;
use crate::lowdeg::{recover_low_degree, LowDegConfig, MonomialBasis};
use crate::noise::{NoiseParams, Oracle, OracleStats, Signal};
use crate::rng::{derive_seed, stream};
use crate::spectral::{BooleanSpectrum, FreqVec, TorusSpectrum};
use crate::torus_sfft::{torus_sfft, TorusSfftConfig};

const TAG_TRUTH: u64 = 0x7E;
const TAG_NOISE: u64 = 0x7F;
const TAG_ALGO: u64 = 0x80;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[default]
    BooleanSfft,
    TorusSfft,
    LowDegree,
    Granular,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::BooleanSfft => "boolean-sfft",
            Algorithm::TorusSfft => "torus-sfft",
            Algorithm::LowDegree => "low-degree",
            Algorithm::Granular => "granular",
        }
    }
}

/// One experiment. Domain parameters at the top level override the matching fields of the
/// per-algorithm sections, which otherwise carry the tunable constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub algorithm: Algorithm,
    /// Cube dimension.
    pub n: usize,
    /// Sparsity.
    pub k: usize,
    /// Degree for the low-degree algorithm.
    pub d: usize,
    pub bandlimit: u64,
    pub eta: f64,
    pub delta: f64,
    pub noise: NoiseParams,
    pub boolean: BooleanSfftConfig,
    pub torus: TorusSfftConfig,
    pub lowdeg: LowDegConfig,
    pub granular: GranularConfig,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    /// A trial succeeds when the support is exact and, if set, the ℓ∞ coefficient error is at most this.
    pub coef_tolerance: Option<f64>,
    /// The run passes when the success rate reaches this.
    pub min_success_rate: Option<f64>,
    /// Directory for `<name>.csv` and `<name>.json`.
    pub output: Option<PathBuf>,
    /// Adds wall-clock times to the JSON output, which then differs between runs.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            algorithm: Algorithm::BooleanSfft,
            n: 10,
            k: 1,
            d: 1,
            bandlimit: 64,
            eta: 1.0,
            delta: 0.2,
            noise: NoiseParams::default(),
            boolean: BooleanSfftConfig::default(),
            torus: TorusSfftConfig::default(),
            lowdeg: LowDegConfig::default(),
            granular: GranularConfig::default(),
            trials: 1,
            seed: 0,
            workers: 1,
            coef_tolerance: None,
            min_success_rate: None,
            output: None,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::InvalidParam(format!("bad experiment name `{}`", self.name)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParam("trials must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParam("workers must be positive".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParam("eta must be positive".into()));
        }
        self.noise.validate()?;
        match self.algorithm {
            Algorithm::BooleanSfft => self.boolean_config(0).validate(self.n),
            Algorithm::TorusSfft => self.torus_config(0).validate(),
            Algorithm::LowDegree => self.lowdeg_config(0).validate(),
            Algorithm::Granular => self.granular_config(0).validate(),
        }
    }

    fn truth_domain(&self) -> TruthDomain {
        match self.algorithm {
            Algorithm::BooleanSfft => TruthDomain::Boolean { n: self.n, k: self.k },
            Algorithm::TorusSfft => TruthDomain::Torus { bandlimit: self.bandlimit, k: self.k, granular: false },
            Algorithm::LowDegree => TruthDomain::LowDegree { n: self.n, d: self.d },
            Algorithm::Granular => TruthDomain::Torus { bandlimit: self.bandlimit, k: self.k, granular: true },
        }
    }

    pub fn boolean_config(&self, seed: u64) -> BooleanSfftConfig {
        BooleanSfftConfig { k: self.k, delta: self.delta, eta: self.eta, seed, ..self.boolean.clone() }
    }

    pub fn torus_config(&self, seed: u64) -> TorusSfftConfig {
        TorusSfftConfig {
            bandlimit: self.bandlimit,
            k: self.k,
            delta: self.delta,
            eta: self.eta,
            seed,
            ..self.torus.clone()
        }
    }

    pub fn lowdeg_config(&self, seed: u64) -> LowDegConfig {
        LowDegConfig { n: self.n, d: self.d, delta: self.delta, epsilon: self.noise.epsilon, seed, ..self.lowdeg.clone() }
    }

    pub fn granular_config(&self, seed: u64) -> GranularConfig {
        GranularConfig {
            bandlimit: self.bandlimit,
            k: self.k,
            eta: self.eta,
            delta: self.delta,
            seed,
            ..self.granular.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthDomain {
    Boolean { n: usize, k: usize },
    /// Granular truths have real and imaginary parts in `η·ℤ` and `Σ|v|² ≤ 1`.
    Torus { bandlimit: u64, k: usize, granular: bool },
    /// Every monomial of degree at most `d` gets a coefficient.
    LowDegree { n: usize, d: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Truth {
    Boolean(BooleanSpectrum),
    Torus(TorusSpectrum),
}

fn signed_magnitude<R: Rng>(eta: f64, rng: &mut R) -> f64 {
    let mag = rng.gen_range(eta..=2.0 * eta);
    if rng.gen::<bool>() {
        mag
    } else {
        -mag
    }
}

/// Random ground truth: distinct uniform frequencies, magnitudes uniform in `[η, 2η]` with random
/// sign or phase.
pub fn truth_generator(domain: TruthDomain, eta: f64, seed: u64) -> Result<Truth> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParam("eta must be positive".into()));
    }
    let mut rng = stream(seed, &[TAG_TRUTH]);
    match domain {
        TruthDomain::Boolean { n, k } => {
            if n == 0 || n > 63 {
                return Err(Error::InvalidParam(format!("n = {n} outside 1..=63")));
            }
            if n < 64 && k as u128 > 1u128 << n {
                return Err(Error::InvalidParam(format!("k = {k} exceeds 2^{n} characters")));
            }
            let mut spec = BooleanSpectrum::new(n);
            if n <= 20 {
                for i in sample(&mut rng, 1 << n, k) {
                    spec.insert(FreqVec::from_index(n, i as u64), signed_magnitude(eta, &mut rng))?;
                }
            } else {
                while spec.l0() < k {
                    let xi = FreqVec::random(n, &mut rng);
                    if spec.get(&xi) == 0.0 {
                        let c = signed_magnitude(eta, &mut rng);
                        spec.insert(xi, c)?;
                    }
                }
            }
            Ok(Truth::Boolean(spec))
        }
        TruthDomain::Torus { bandlimit, k, granular } => {
            let size = 2 * bandlimit + 1;
            if k as u64 > size {
                return Err(Error::InvalidParam(format!("k = {k} exceeds {size} frequencies")));
            }
            let f = bandlimit as i64;
            let freqs: Vec<i64> = sample(&mut rng, size as usize, k).into_iter().map(|i| i as i64 - f).collect();
            let amps: Vec<Complex64> = if granular {
                if k as f64 * eta * eta > 1.0 + 1e-12 {
                    return Err(Error::InvalidParam(format!("{k} amplitudes of size {eta} exceed unit energy")));
                }
                let snap = |v: f64| (v / eta).round() * eta;
                let mut tries = 0;
                loop {
                    tries += 1;
                    if tries > 100_000 {
                        return Err(Error::InvalidParam("no granular amplitudes within unit energy".into()));
                    }
                    let amps: Vec<Complex64> = (0..k)
                        .map(|_| {
                            let z = Complex64::from_polar(rng.gen_range(eta..=2.0 * eta), rng.gen_range(0.0..std::f64::consts::TAU));
                            Complex64::new(snap(z.re), snap(z.im))
                        })
                        .collect();
                    let energy: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                    if amps.iter().all(|a| a.norm_sqr() > 0.0) && energy <= 1.0 + 1e-12 {
                        break amps;
                    }
                }
            } else {
                (0..k)
                    .map(|_| Complex64::from_polar(rng.gen_range(eta..=2.0 * eta), rng.gen_range(0.0..std::f64::consts::TAU)))
                    .collect()
            };
            Ok(Truth::Torus(TorusSpectrum::from_entries(bandlimit, freqs.into_iter().zip(amps))?))
        }
        TruthDomain::LowDegree { n, d } => {
            let basis = MonomialBasis::new(n, d)?;
            let coefs: Vec<f64> = (0..basis.len()).map(|_| signed_magnitude(eta, &mut rng)).collect();
            Ok(Truth::Boolean(basis.spectrum(&coefs)?))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub trial: usize,
    pub seed: u64,
    pub support_exact: bool,
    pub success: bool,
    pub linf_error: f64,
    pub l2_error: f64,
    pub queries: u64,
    pub oracle: OracleStats,
    #[serde(skip)]
    pub runtime_ms: f64,
    /// Module-level failure or diagnostic.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub algorithm: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub failures: usize,
    pub linf_p50: f64,
    pub linf_p95: f64,
    pub linf_max: f64,
    pub l2_p50: f64,
    pub l2_p95: f64,
    pub l2_max: f64,
    pub pass: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub reports: Vec<RecoveryReport>,
    pub summary: ExperimentSummary,
    pub runtime_ms: f64,
}

fn support_equal<T: PartialEq>(a: Vec<T>, b: Vec<T>) -> bool {
    a == b
}

fn run_trial(cfg: &ExperimentConfig, trial: usize) -> RecoveryReport {
    let seed = derive_seed(cfg.seed, &[trial as u64]);
    let start = Instant::now();
    let mut report = RecoveryReport {
        trial,
        seed,
        support_exact: false,
        success: false,
        linf_error: f64::NAN,
        l2_error: f64::NAN,
        queries: 0,
        oracle: OracleStats::default(),
        runtime_ms: 0.0,
        note: None,
    };
    let noise = NoiseParams { seed: derive_seed(seed, &[TAG_NOISE]), ..cfg.noise };
    let algo_seed = derive_seed(seed, &[TAG_ALGO]);
    let result: Result<()> = (|| {
        match (cfg.algorithm, truth_generator(cfg.truth_domain(), cfg.eta, seed)?) {
            (Algorithm::BooleanSfft, Truth::Boolean(truth)) => {
                let sig: Arc<dyn Signal<FreqVec>> = Arc::new(truth.clone());
                let oracle = Oracle::new(sig, noise)?;
                let out = boolean_sfft(&|x| oracle.query(x), cfg.n, &cfg.boolean_config(algo_seed))?;
                report.support_exact = support_equal(out.spectrum.support(), truth.support());
                report.linf_error = out.spectrum.linf_distance(&truth);
                report.l2_error = out.spectrum.l2_distance(&truth);
                report.oracle = oracle.stats();
                report.note = out.diagnostic;
            }
            (Algorithm::LowDegree, Truth::Boolean(truth)) => {
                let sig: Arc<dyn Signal<FreqVec>> = Arc::new(truth.clone());
                let oracle = Oracle::new(sig, noise)?;
                let out = recover_low_degree(&|x| oracle.query(x), &cfg.lowdeg_config(algo_seed))?;
                report.support_exact = support_equal(out.spectrum.support(), truth.support());
                let (linf, l2) = out.errors(&truth);
                report.linf_error = linf;
                report.l2_error = l2;
                report.oracle = oracle.stats();
            }
            (Algorithm::TorusSfft, Truth::Torus(truth)) => {
                let sig: Arc<dyn Signal<f64>> = Arc::new(truth.clone());
                let oracle = Oracle::new(sig, noise)?;
                let out = torus_sfft(&|t| oracle.query(&t), &cfg.torus_config(algo_seed))?;
                report.support_exact = support_equal(out.spectrum.support(), truth.support());
                report.linf_error = out.spectrum.linf_distance(&truth);
                report.l2_error = torus_l2(&out.spectrum, &truth);
                report.oracle = oracle.stats();
                report.note = out.diagnostic;
            }
            (Algorithm::Granular, Truth::Torus(truth)) => {
                let sig: Arc<dyn Signal<f64>> = Arc::new(truth.clone());
                let oracle = Oracle::new(sig, noise)?;
                let out = granular_decode(&|t| oracle.query(&t), &cfg.granular_config(algo_seed))?;
                report.oracle = oracle.stats();
                match out.spectrum {
                    Some(g) => {
                        report.support_exact = support_equal(g.support(), truth.support());
                        report.linf_error = g.linf_distance(&truth);
                        report.l2_error = torus_l2(&g, &truth);
                    }
                    None => report.note = out.diagnostic,
                }
            }
            _ => unreachable!("truth domain follows the algorithm"),
        }
        Ok(())
    })();
    if let Err(e) = result {
        report.note = Some(e.to_string());
    }
    report.queries = report.oracle.query_count;
    report.success = report.support_exact && cfg.coef_tolerance.is_none_or(|tol| report.linf_error <= tol);
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

fn torus_l2(a: &TorusSpectrum, b: &TorusSpectrum) -> f64 {
    let mut keys: Vec<i64> = a.support().into_iter().chain(b.support()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.iter().map(|&xi| (a.get(xi) - b.get(xi)).norm_sqr()).sum::<f64>().sqrt()
}

fn summarize(cfg: &ExperimentConfig, reports: &[RecoveryReport]) -> ExperimentSummary {
    let successes = reports.iter().filter(|r| r.success).count();
    let failures = reports.iter().filter(|r| r.note.is_some() && !r.support_exact).count();
    let sorted = |f: fn(&RecoveryReport) -> f64| {
        let mut v: Vec<f64> = reports.iter().map(f).filter(|x| !x.is_nan()).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let linf = sorted(|r| r.linf_error);
    let l2 = sorted(|r| r.l2_error);
    let rate = successes as f64 / reports.len().max(1) as f64;
    ExperimentSummary {
        name: cfg.name.clone(),
        algorithm: cfg.algorithm.name().into(),
        trials: reports.len(),
        successes,
        success_rate: rate,
        failures,
        linf_p50: quantile(&linf, 0.5),
        linf_p95: quantile(&linf, 0.95),
        linf_max: linf.last().copied().unwrap_or(f64::NAN),
        l2_p50: quantile(&l2, 0.5),
        l2_p95: quantile(&l2, 0.95),
        l2_max: l2.last().copied().unwrap_or(f64::NAN),
        pass: cfg.min_success_rate.map(|t| rate >= t),
    }
}

/// Runs all trials on `workers` threads; reports come back sorted by trial id.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<RecoveryReport>> = Mutex::new(Vec::with_capacity(cfg.trials));
    std::thread::scope(|s| {
        for _ in 0..cfg.workers.min(cfg.trials) {
            s.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::SeqCst);
                if t >= cfg.trials {
                    break;
                }
                let r = run_trial(cfg, t);
                done.lock().expect("report lock").push(r);
            });
        }
    });
    let mut reports = done.into_inner().expect("report lock");
    reports.sort_by_key(|r| r.trial);
    let summary = summarize(cfg, &reports);
    Ok(ExperimentOutcome { config: cfg.clone(), reports, summary, runtime_ms: start.elapsed().as_secs_f64() * 1e3 })
}

/// Column order of the per-trial CSV.
pub const CSV_HEADER: [&str; 11] = [
    "trial",
    "seed",
    "support_exact",
    "success",
    "linf_error",
    "l2_error",
    "queries",
    "outliers",
    "min_separation",
    "note",
    "algorithm",
];

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.12e}")
    }
}

pub fn reports_csv(outcome: &ExperimentOutcome) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidParam(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &outcome.reports {
        w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.support_exact.to_string(),
            r.success.to_string(),
            fmt_f64(r.linf_error),
            fmt_f64(r.l2_error),
            r.queries.to_string(),
            r.oracle.outlier_count.to_string(),
            r.oracle.min_separation.map(fmt_f64).unwrap_or_default(),
            r.note.clone().unwrap_or_default(),
            outcome.config.algorithm.name().to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParam(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidParam(e.to_string()))
}

pub fn outcome_json(outcome: &ExperimentOutcome) -> Result<String> {
    let mut v = serde_json::json!({
        "config": outcome.config,
        "summary": outcome.summary,
        "reports": outcome.reports,
    });
    if outcome.config.record_timing {
        v["timing"] = serde_json::json!({
            "total_ms": outcome.runtime_ms,
            "trial_ms": outcome.reports.iter().map(|r| r.runtime_ms).collect::<Vec<_>>(),
        });
    }
    serde_json::to_string_pretty(&v).map_err(|e| Error::Json(e.to_string()))
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`; returns both paths.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let io = |e: std::io::Error| Error::InvalidParam(format!("io: {e}"));
    std::fs::create_dir_all(dir).map_err(io)?;
    let csv_path = dir.join(format!("{}.csv", outcome.config.name));
    let json_path = dir.join(format!("{}.json", outcome.config.name));
    std::fs::write(&csv_path, reports_csv(outcome)?).map_err(io)?;
    std::fs::write(&json_path, outcome_json(outcome)?).map_err(io)?;
    Ok((csv_path, json_path))
}
