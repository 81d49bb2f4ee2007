//! Monte Carlo checks of the concentration and isolation statements the decoders rely on.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolean_sfft::check_isolation;
use crate::error::{Error, Result};
use crate::lowdeg::MonomialBasis;
use crate::rng::{stream, SimRng};
use crate::spectral::{random_invertible_f2, BooleanSpectrum, FreqVec, TorusSpectrum};
use crate::torus_sfft::{isolated_mod, prime_pool};

/// Grid used for torus expectations and maxima.
pub const TORUS_GRID: usize = 1 << 16;
/// Largest cube enumerated for exact expectations.
pub const EXACT_MAX_N: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Boolean { n: usize },
    Torus { bandlimit: u64 },
}

impl Domain {
    fn validate(&self) -> Result<()> {
        match *self {
            Domain::Boolean { n } if n == 0 || n > EXACT_MAX_N => {
                Err(Error::InvalidParam(format!("n = {n} outside 1..={EXACT_MAX_N}")))
            }
            Domain::Torus { bandlimit } if bandlimit == 0 || bandlimit > 1 << 20 => {
                Err(Error::InvalidParam(format!("bandlimit {bandlimit} outside 1..=2^20")))
            }
            _ => Ok(()),
        }
    }

    /// Number of characters.
    pub fn size(&self) -> u64 {
        match *self {
            Domain::Boolean { n } => 1 << n,
            Domain::Torus { bandlimit } => 2 * bandlimit + 1,
        }
    }
}

/// A function given by its spectrum on either domain.
#[derive(Clone, Debug, PartialEq)]
pub enum LabFunction {
    Boolean(BooleanSpectrum),
    Torus(TorusSpectrum),
}

impl LabFunction {
    pub fn l1(&self) -> f64 {
        match self {
            LabFunction::Boolean(s) => s.l1(),
            LabFunction::Torus(s) => s.l1(),
        }
    }

    pub fn l2(&self) -> f64 {
        match self {
            LabFunction::Boolean(s) => s.l2(),
            LabFunction::Torus(s) => s.l2(),
        }
    }

    pub fn sparsity(&self) -> usize {
        match self {
            LabFunction::Boolean(s) => s.l0(),
            LabFunction::Torus(s) => s.l0(),
        }
    }

    pub fn scaled(&self, a: f64) -> LabFunction {
        match self {
            LabFunction::Boolean(s) => LabFunction::Boolean(s.scaled(a)),
            LabFunction::Torus(s) => LabFunction::Torus(
                TorusSpectrum::from_entries(s.bandlimit(), s.iter().map(|(&xi, &c)| (xi, c * a)))
                    .expect("same support"),
            ),
        }
    }

    /// `|h|` over the whole cube, or over the torus grid.
    pub fn abs_values(&self) -> Result<Vec<f64>> {
        match self {
            LabFunction::Boolean(s) => {
                if s.n() > EXACT_MAX_N {
                    return Err(Error::InvalidParam(format!("n = {} too large to enumerate", s.n())));
                }
                Ok(s.to_table()?.into_iter().map(f64::abs).collect())
            }
            LabFunction::Torus(s) => {
                Ok((0..TORUS_GRID).map(|j| s.eval(j as f64 / TORUS_GRID as f64).norm()).collect())
            }
        }
    }

    pub fn mean_abs(&self) -> Result<f64> {
        let v = self.abs_values()?;
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    }

    /// `|h|` at `m` uniform points.
    pub fn sample_abs(&self, m: usize, rng: &mut SimRng) -> Vec<f64> {
        match self {
            LabFunction::Boolean(s) => (0..m)
                .map(|_| s.eval(&FreqVec::random(s.n(), rng)).expect("point length").abs())
                .collect(),
            LabFunction::Torus(s) => (0..m).map(|_| s.eval(rng.gen::<f64>()).norm()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    KSparse { k: usize },
    /// Spectra with `‖ĥ‖₁ ≤ 2√k·‖ĥ‖₂`.
    RelaxedF { k: usize },
    /// Degree at most `d`; Boolean only.
    Degree { d: usize },
}

impl FamilyKind {
    /// The `k` in the `2√k` bound the family is tested against.
    pub fn k(&self, domain: &Domain) -> usize {
        match *self {
            FamilyKind::KSparse { k } | FamilyKind::RelaxedF { k } => k,
            FamilyKind::Degree { d } => match *domain {
                Domain::Boolean { n } => crate::lowdeg::count_up_to(n, d) as usize,
                Domain::Torus { .. } => 0,
            },
        }
    }
}

/// Random normalized members of a function family.
pub struct FamilySampler {
    pub kind: FamilyKind,
    pub domain: Domain,
    rng: SimRng,
}

fn random_coef(domain: &Domain, rng: &mut SimRng) -> Complex64 {
    match domain {
        Domain::Boolean { .. } => Complex64::new(rng.gen_range(-1.0..1.0), 0.0),
        Domain::Torus { .. } => Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
    }
}

fn build(domain: &Domain, entries: Vec<(u64, Complex64)>) -> Result<LabFunction> {
    match *domain {
        Domain::Boolean { n } => Ok(LabFunction::Boolean(BooleanSpectrum::from_entries(
            n,
            entries.into_iter().map(|(i, c)| (FreqVec::from_index(n, i), c.re)),
        )?)),
        Domain::Torus { bandlimit } => Ok(LabFunction::Torus(TorusSpectrum::from_entries(
            bandlimit,
            entries.into_iter().map(|(i, c)| (i as i64 - bandlimit as i64, c)),
        )?)),
    }
}

fn normalized(h: LabFunction) -> Result<LabFunction> {
    let l2 = h.l2();
    if l2 == 0.0 {
        return Err(Error::InvalidParam("zero function".into()));
    }
    Ok(h.scaled(1.0 / l2))
}

impl FamilySampler {
    pub fn new(kind: FamilyKind, domain: Domain, seed: u64) -> Result<Self> {
        domain.validate()?;
        match kind {
            FamilyKind::KSparse { k } | FamilyKind::RelaxedF { k } => {
                if k == 0 || k as u64 > domain.size() {
                    return Err(Error::InvalidParam(format!("k = {k} outside 1..={}", domain.size())));
                }
            }
            FamilyKind::Degree { .. } => {
                if let Domain::Torus { .. } = domain {
                    return Err(Error::InvalidParam("degree family lives on the cube".into()));
                }
            }
        }
        Ok(FamilySampler { kind, domain, rng: stream(seed, &[0x1AB]) })
    }

    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    /// A member with `‖ĥ‖₂ = 1`.
    pub fn sample(&mut self) -> Result<LabFunction> {
        let size = self.domain.size();
        let h = match self.kind {
            FamilyKind::KSparse { k } => {
                let idx = sample(&mut self.rng, size as usize, k);
                let entries = idx.into_iter().map(|i| (i as u64, random_coef(&self.domain, &mut self.rng))).collect();
                build(&self.domain, entries)?
            }
            FamilyKind::RelaxedF { k } => {
                // a 2k-sparse core plus a spread tail on the remaining characters that uses part of the ℓ1 slack
                let core = (2 * k).min(size as usize);
                let idx: Vec<usize> = sample(&mut self.rng, size as usize, core).into_vec();
                let mut entries: Vec<(u64, Complex64)> =
                    idx.iter().map(|&i| (i as u64, random_coef(&self.domain, &mut self.rng))).collect();
                let l2: f64 = entries.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
                for e in entries.iter_mut() {
                    e.1 /= l2;
                }
                let l1: f64 = entries.iter().map(|(_, c)| c.norm()).sum();
                let slack = (2.0 * (k as f64).sqrt() - l1).max(0.0);
                let used: BTreeSet<usize> = idx.into_iter().collect();
                let rest: Vec<u64> = (0..size).filter(|i| !used.contains(&(*i as usize))).collect();
                if !rest.is_empty() && slack > 0.0 {
                    let share = self.rng.gen::<f64>() * slack * (1.0 - 1e-9) / rest.len() as f64;
                    for i in rest {
                        let c = random_coef(&self.domain, &mut self.rng);
                        if c.norm() > 0.0 {
                            entries.push((i, c / c.norm() * share));
                        }
                    }
                }
                build(&self.domain, entries)?
            }
            FamilyKind::Degree { d } => {
                let Domain::Boolean { n } = self.domain else { unreachable!() };
                let basis = MonomialBasis::new(n, d)?;
                let coefs: Vec<f64> = (0..basis.len()).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
                LabFunction::Boolean(basis.spectrum(&coefs)?)
            }
        };
        normalized(h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub l1: f64,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// `2√k`.
    pub bound: f64,
    pub member: bool,
}

/// `‖ĥ‖₁ ≤ 2√k`, `max|h| ≤ 2√k` and `E|h| ≥ 1/(2√k)` for `h` scaled to `‖ĥ‖₂ = 1`.
pub fn family_f_membership(h: &LabFunction, k: usize) -> Result<Membership> {
    let h = normalized(h.clone())?;
    let vals = h.abs_values()?;
    let max_abs = vals.iter().copied().fold(0.0, f64::max);
    let mean_abs = vals.iter().sum::<f64>() / vals.len() as f64;
    let l1 = h.l1();
    let bound = 2.0 * (k as f64).sqrt();
    let tol = 1e-9;
    Ok(Membership {
        l1,
        max_abs,
        mean_abs,
        bound,
        member: l1 <= bound + tol && max_abs <= bound + tol && mean_abs >= 1.0 / bound - tol,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Moment {
    #[default]
    Abs,
    Square,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub m: usize,
    pub trials: usize,
    /// Draws with `E|h| = 0`.
    pub skipped: usize,
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
    pub deviations: Vec<f64>,
}

/// Nearest-rank quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

impl DeviationReport {
    pub fn from_deviations(m: usize, trials: usize, skipped: usize, deviations: Vec<f64>) -> Self {
        let mut sorted = deviations.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = if sorted.is_empty() { f64::NAN } else { sorted.iter().sum::<f64>() / sorted.len() as f64 };
        DeviationReport {
            m,
            trials,
            skipped,
            mean,
            p50: quantile(&sorted, 0.5),
            p95: quantile(&sorted, 0.95),
            max: sorted.last().copied().unwrap_or(f64::NAN),
            deviations,
        }
    }

    /// Standard error of the mean deviation.
    pub fn std_error(&self) -> f64 {
        let n = self.deviations.len();
        if n < 2 {
            return 0.0;
        }
        let var = self.deviations.iter().map(|d| (d - self.mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

/// `|Σ_i |h(x_i)|^p − m·E|h|^p| / (m·E|h|^p)` for one function and its sample.
pub fn relative_deviation(h: &LabFunction, m: usize, moment: Moment, rng: &mut SimRng) -> Result<Option<f64>> {
    let expect = match moment {
        Moment::Abs => h.mean_abs()?,
        Moment::Square => h.l2().powi(2),
    };
    if expect == 0.0 {
        return Ok(None);
    }
    let vals = h.sample_abs(m, rng);
    let sum: f64 = match moment {
        Moment::Abs => vals.iter().sum(),
        Moment::Square => vals.iter().map(|v| v * v).sum(),
    };
    let target = m as f64 * expect;
    Ok(Some((sum - target).abs() / target))
}

/// Per trial: draw `h`, draw `m` points, record the relative deviation of the empirical moment.
pub fn deviation(sampler: &mut FamilySampler, m: usize, trials: usize, moment: Moment) -> Result<DeviationReport> {
    if m == 0 {
        return Err(Error::InvalidParam("m must be positive".into()));
    }
    let mut devs = Vec::with_capacity(trials);
    let mut skipped = 0;
    for _ in 0..trials {
        let h = sampler.sample()?;
        match relative_deviation(&h, m, moment, sampler.rng())? {
            Some(d) => devs.push(d),
            None => skipped += 1,
        }
    }
    Ok(DeviationReport::from_deviations(m, trials, skipped, devs))
}

pub fn ell1_deviation(sampler: &mut FamilySampler, m: usize, trials: usize) -> Result<DeviationReport> {
    deviation(sampler, m, trials, Moment::Abs)
}

pub fn ell2_deviation(sampler: &mut FamilySampler, m: usize, trials: usize) -> Result<DeviationReport> {
    deviation(sampler, m, trials, Moment::Square)
}

/// `m = ⌈C·k²·ln|T|⌉`.
pub fn pilot_m(constant: f64, k: usize, num_chars: u64) -> usize {
    (constant * (k * k) as f64 * (num_chars as f64).ln()).ceil() as usize
}

/// Whether the mean deviation at `2m` exceeds the one at `m` by more than three standard errors.
pub fn monotone_in_m(at_m: &DeviationReport, at_2m: &DeviationReport) -> bool {
    let se = (at_m.std_error().powi(2) + at_2m.std_error().powi(2)).sqrt();
    at_2m.mean <= at_m.mean + 3.0 * se
}

/// Hand-built members of the relaxed family on {0,1}^n: a single character, the constant, the
/// spread vector and the AND of `log₂(2k)` coordinates. All are normalized.
pub fn structured_candidates(n: usize, k: usize, rng: &mut SimRng) -> Result<Vec<(String, LabFunction)>> {
    let domain = Domain::Boolean { n };
    domain.validate()?;
    let size = domain.size();
    if k == 0 || k as u64 > size {
        return Err(Error::InvalidParam(format!("k = {k} outside 1..={size}")));
    }
    let mut out = Vec::new();
    let xi = rng.gen_range(1..size);
    out.push(("character".to_string(), build(&domain, vec![(xi, Complex64::new(1.0, 0.0))])?));
    out.push(("constant".to_string(), build(&domain, vec![(0, Complex64::new(1.0, 0.0))])?));
    let heavy: BTreeSet<usize> = sample(rng, size as usize, k).into_iter().collect();
    let big = 1.0 / (k as f64).sqrt();
    let small = (k as f64).sqrt() / size as f64;
    let sign = |r: &mut SimRng| if r.gen::<bool>() { 1.0 } else { -1.0 };
    let spread: Vec<(u64, Complex64)> = (0..size)
        .map(|i| {
            let mag = if heavy.contains(&(i as usize)) { big } else { small };
            (i, Complex64::new(mag * sign(rng), 0.0))
        })
        .collect();
    out.push(("spread".to_string(), build(&domain, spread)?));
    let s = crate::boolean_sfft::ceil_log2(2 * k).min(n);
    // AND_{i<s} x_i = 2^{−s}·Σ_{U⊆[s]} (−1)^{|U|} χ_U
    let and: Vec<(u64, Complex64)> = (0..1u64 << s)
        .map(|u| {
            let sgn = if u.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            (u, Complex64::new(sgn / (1u64 << s) as f64, 0.0))
        })
        .collect();
    out.push((format!("and-{s}"), build(&domain, and)?));
    out.into_iter().map(|(name, h)| Ok((name, normalized(h)?))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsolationDomain {
    Boolean { n: usize, ell: usize },
    Torus { bandlimit: u64, prime_floor: u64, pool_size: usize },
}

/// Fraction of trials in which all `k` random distinct frequencies land in distinct buckets.
pub fn isolation_rate(domain: IsolationDomain, k: usize, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be positive".into()));
    }
    let mut rng = stream(seed, &[0x150]);
    let mut hits = 0;
    match domain {
        IsolationDomain::Boolean { n, ell } => {
            if n == 0 || n > 63 || ell == 0 || ell > n {
                return Err(Error::InvalidParam(format!("need 1 ≤ ell ≤ n ≤ 63, got n = {n}, ell = {ell}")));
            }
            if n < 64 && k as u128 > 1u128 << n {
                return Err(Error::InvalidParam(format!("k = {k} exceeds 2^{n}")));
            }
            for _ in 0..trials {
                let (a, _) = random_invertible_f2(n, &mut rng)?;
                let mut freqs: BTreeSet<FreqVec> = BTreeSet::new();
                while freqs.len() < k {
                    freqs.insert(FreqVec::random(n, &mut rng));
                }
                let freqs: Vec<FreqVec> = freqs.into_iter().collect();
                if check_isolation(&a, &freqs, ell)?.iter().all(|&b| b) {
                    hits += 1;
                }
            }
        }
        IsolationDomain::Torus { bandlimit, prime_floor, pool_size } => {
            if k as u64 > 2 * bandlimit + 1 {
                return Err(Error::InvalidParam(format!("k = {k} exceeds {} frequencies", 2 * bandlimit + 1)));
            }
            let pool = prime_pool(prime_floor, pool_size)?;
            let f = bandlimit as i64;
            for _ in 0..trials {
                let b = pool[rng.gen_range(0..pool.len())];
                let freqs: Vec<i64> = sample(&mut rng, (2 * f + 1) as usize, k).into_iter().map(|i| i as i64 - f).collect();
                if isolated_mod(&freqs, b).iter().all(|&x| x) {
                    hits += 1;
                }
            }
        }
    }
    Ok(hits as f64 / trials as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    #[default]
    Ell1,
    Ell2,
    Isolation,
    Family,
}

impl Claim {
    pub fn name(&self) -> &'static str {
        match self {
            Claim::Ell1 => "ell1",
            Claim::Ell2 => "ell2",
            Claim::Isolation => "isolation",
            Claim::Family => "family",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConcentrationConfig {
    pub claim: Claim,
    pub family: FamilyKind,
    pub domain: Domain,
    /// Sample size; defaults to `m_constant·k²·ln|T|`.
    pub m: Option<usize>,
    pub m_constant: f64,
    pub trials: usize,
    /// Upper bound on the 95th-percentile deviation, or lower bound on the isolation rate.
    pub threshold: f64,
    pub isolation: IsolationDomain,
    pub seed: u64,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        ConcentrationConfig {
            claim: Claim::Ell1,
            family: FamilyKind::RelaxedF { k: 4 },
            domain: Domain::Boolean { n: 10 },
            m: None,
            m_constant: 8.0,
            trials: 200,
            threshold: 0.25,
            isolation: IsolationDomain::Boolean { n: 10, ell: 16 },
            seed: 0,
        }
    }
}

/// One CSV row: `claim, m, trials, p50, p95, max, pass`. Rates fill all three statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub claim: String,
    pub m: usize,
    pub trials: usize,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
    pub pass: bool,
}

pub fn run_concentration(cfg: &ConcentrationConfig) -> Result<ConcentrationRow> {
    let k = cfg.family.k(&cfg.domain).max(1);
    let row = |m, p50, p95, max, pass| ConcentrationRow {
        claim: cfg.claim.name().into(),
        m,
        trials: cfg.trials,
        p50,
        p95,
        max,
        pass,
    };
    match cfg.claim {
        Claim::Ell1 | Claim::Ell2 => {
            let m = cfg.m.unwrap_or_else(|| pilot_m(cfg.m_constant, k, cfg.domain.size()));
            let mut sampler = FamilySampler::new(cfg.family, cfg.domain, cfg.seed)?;
            let moment = if cfg.claim == Claim::Ell1 { Moment::Abs } else { Moment::Square };
            let rep = deviation(&mut sampler, m, cfg.trials, moment)?;
            Ok(row(m, rep.p50, rep.p95, rep.max, rep.p95 <= cfg.threshold))
        }
        Claim::Isolation => {
            let kk = match cfg.family {
                FamilyKind::KSparse { k } | FamilyKind::RelaxedF { k } => k,
                FamilyKind::Degree { .. } => return Err(Error::InvalidParam("isolation needs a sparsity".into())),
            };
            let rate = isolation_rate(cfg.isolation, kk, cfg.trials, cfg.seed)?;
            Ok(row(0, rate, rate, rate, rate >= cfg.threshold))
        }
        Claim::Family => {
            let mut sampler = FamilySampler::new(cfg.family, cfg.domain, cfg.seed)?;
            let mut ok = 0;
            for _ in 0..cfg.trials {
                if family_f_membership(&sampler.sample()?, k)?.member {
                    ok += 1;
                }
            }
            let rate = ok as f64 / cfg.trials.max(1) as f64;
            Ok(row(0, rate, rate, rate, ok == cfg.trials))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_character_is_tight() {
        let h = LabFunction::Boolean(BooleanSpectrum::from_entries(4, [(FreqVec::parse("0110").unwrap(), 1.0)]).unwrap());
        let mem = family_f_membership(&h, 1).unwrap();
        assert!(mem.member);
        assert_eq!((mem.l1, mem.max_abs, mem.mean_abs), (1.0, 1.0, 1.0));
        let mut rng = stream(1, &[]);
        assert_eq!(relative_deviation(&h, 17, Moment::Abs, &mut rng).unwrap(), Some(0.0));
    }

    #[test]
    fn quantiles_by_rank() {
        let v: Vec<f64> = (1..=20).map(|x| x as f64).collect();
        assert_eq!(quantile(&v, 0.95), 19.0);
        assert_eq!(quantile(&v, 0.5), 10.0);
        assert_eq!(quantile(&v, 1.0), 20.0);
    }

    #[test]
    fn k_one_always_isolated() {
        let r = isolation_rate(IsolationDomain::Boolean { n: 6, ell: 2 }, 1, 50, 3).unwrap();
        assert_eq!(r, 1.0);
    }
}
