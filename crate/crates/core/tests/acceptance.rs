//! Acceptance suite. One PASS/FAIL line per criterion; the binary exits nonzero when any fails.
//! Runs without the libtest harness so criteria execute one at a time and wall-clock limits mean something.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use robust_sfft::boolean_sfft::{bucket_spectrum, filtered_bucket_oracle};
use robust_sfft::decode::{collect_samples, k_sparse_bruteforce, linear_decode_samples, BooleanChars, DecodeConfig};
use robust_sfft::granular::{
    anticoncentration_level, anticoncentration_probe, counterexample_level, counterexample_signal, jensen_check,
};
use robust_sfft::harness::{
    reports_csv, run_experiment, truth_generator, Algorithm, ExperimentConfig, ExperimentOutcome, Truth, TruthDomain,
};
use robust_sfft::lab::{ell1_deviation, monotone_in_m, pilot_m, run_concentration, ConcentrationConfig, Domain, FamilyKind, FamilySampler};
use robust_sfft::lowdeg::{euclidean_section_check, hypercontractive_lower_bound, uniform_points, LowDegConfig, MonomialBasis};
use robust_sfft::lp::{l1_regression, solve_lp, LpProblem, LpStatus, Relation, Samples};
use robust_sfft::noise::{NoiseModel, NoiseParams, Oracle, OutlierStrategy, Signal};
use robust_sfft::rng::{derive_seed, stream, SimRng};
use robust_sfft::spectral::{
    affine_pullback_spectrum, boolean_dft, character, cube_points, cyclic_dft, cyclic_inverse, BooleanSpectrum,
    CyclicSpectrum, F2Matrix, FreqVec, TorusSpectrum,
};
use robust_sfft::torus_sfft::{frequency_hash, hash_spectrum, torus_sfft, TorusSfftConfig};

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
    /// Serialized results, compared across repeated runs.
    digest: String,
}

fn report(id: usize, title: &str, v: &Verdict, secs: f64) {
    println!("criterion {id:>2} [{title}]: {} {} ({secs:.1} s)", if v.pass { "PASS" } else { "FAIL" }, v.detail);
}

// 1

fn random_boolean(n: usize, k: usize, rng: &mut SimRng) -> BooleanSpectrum {
    let mut s = BooleanSpectrum::new(n);
    for _ in 0..k {
        s.insert(FreqVec::random(n, rng), rng.gen_range(-1.0..1.0)).unwrap();
    }
    s
}

fn random_torus(f: u64, k: usize, rng: &mut SimRng) -> TorusSpectrum {
    let mut s = TorusSpectrum::new(f);
    while s.l0() < k {
        let xi = rng.gen_range(-(f as i64)..=f as i64);
        s.insert(xi, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap();
    }
    s
}

fn direct_eval(s: &BooleanSpectrum, x: &FreqVec) -> f64 {
    s.iter().map(|(xi, c)| if xi.dot(x) { -c } else { *c }).sum()
}

fn boolean_gap(a: &BooleanSpectrum, b: &BooleanSpectrum) -> f64 {
    let mut worst = 0.0f64;
    for (xi, c) in a.iter() {
        worst = worst.max((c - b.get(xi)).abs());
    }
    for (xi, c) in b.iter() {
        worst = worst.max((c - a.get(xi)).abs());
    }
    worst
}

/// Spectrum of `x ↦ g(Ax + b)` from its full value table.
fn pullback_oracle(g: &BooleanSpectrum, a: &F2Matrix, b: &FreqVec) -> BooleanSpectrum {
    let n = g.n();
    let table: Vec<f64> = cube_points(n)
        .map(|x| {
            let mut y = a.mul_vec(&x).unwrap();
            y.xor_assign(b);
            direct_eval(g, &y)
        })
        .collect();
    boolean_dft(&table).unwrap()
}

fn all_matrices(n: usize) -> Vec<F2Matrix> {
    (0u64..1 << (n * n))
        .map(|bits| {
            let mut a = F2Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a.set(i, j, bits >> (i * n + j) & 1 == 1);
                }
            }
            a
        })
        .filter(|a| a.rank() == n)
        .collect()
}

fn transform_identities() -> Verdict {
    let mut rng = stream(SEED, &[1]);
    let mut err = [0.0f64; 5];
    // Parseval and round trips
    for n in 1..=10 {
        let s = random_boolean(n, 1 + n % 5, &mut rng);
        let table: Vec<f64> = cube_points(n).map(|x| direct_eval(&s, &x)).collect();
        let energy = table.iter().map(|v| v * v).sum::<f64>() / table.len() as f64;
        err[0] = err[0].max((energy - s.l2().powi(2)).abs());
        err[0] = err[0].max(boolean_gap(&boolean_dft(&table).unwrap(), &s));
        err[0] = err[0].max(s.to_table().unwrap().iter().zip(&table).fold(0.0, |a, (u, v)| a.max((u - v).abs())));
    }
    for b in [1u64, 2, 7, 16, 31] {
        let mut c = CyclicSpectrum::new(b);
        for l in 0..b {
            c.insert(l, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap();
        }
        let back = cyclic_dft(&cyclic_inverse(&c)).unwrap();
        err[1] = err[1].max(back.linf_distance(&c));
        let values = cyclic_inverse(&c);
        let energy = values.iter().map(|z| z.norm_sqr()).sum::<f64>() / b as f64;
        err[1] = err[1].max((energy - c.l2().powi(2)).abs());
    }
    for f in [1u64, 5, 40] {
        let s = random_torus(f, 4.min(2 * f as usize + 1), &mut rng);
        let grid = 4 * f as usize + 3;
        let energy = (0..grid).map(|j| s.eval(j as f64 / grid as f64).norm_sqr()).sum::<f64>() / grid as f64;
        err[1] = err[1].max((energy - s.l2().powi(2)).abs());
    }
    // affine pullback: exhaustive for n ≤ 3, random at n = 6
    for n in 1..=3 {
        let g = random_boolean(n, 1 << n, &mut rng);
        for a in all_matrices(n) {
            for b in cube_points(n) {
                let got = affine_pullback_spectrum(&g, &a, &b).unwrap();
                err[2] = err[2].max(boolean_gap(&got, &pullback_oracle(&g, &a, &b)));
            }
        }
    }
    for _ in 0..200 {
        let g = random_boolean(6, rng.gen_range(1..=8), &mut rng);
        let a = robust_sfft::spectral::random_invertible_f2(6, &mut rng).unwrap().0;
        let b = FreqVec::random(6, &mut rng);
        err[2] = err[2].max(boolean_gap(&affine_pullback_spectrum(&g, &a, &b).unwrap(), &pullback_oracle(&g, &a, &b)));
    }
    // bucket identity
    for _ in 0..100 {
        let n = rng.gen_range(2..=9);
        let ell = rng.gen_range(1..=n);
        let f = random_boolean(n, rng.gen_range(1..=6), &mut rng);
        let a = robust_sfft::spectral::random_invertible_f2(n, &mut rng).unwrap().0;
        let b = FreqVec::random(n, &mut rng);
        let y = |x: &FreqVec| Complex64::new(direct_eval(&f, x), 0.0);
        let bucket = filtered_bucket_oracle(&y, &a, &b);
        let table: Vec<f64> = cube_points(ell).map(|u| bucket(&u).re).collect();
        err[3] = err[3].max(boolean_gap(&boolean_dft(&table).unwrap(), &bucket_spectrum(&f, &a, &b, ell).unwrap()));
    }
    // hash to bins
    for _ in 0..100 {
        let f = rng.gen_range(1..=300u64);
        let s = random_torus(f, rng.gen_range(1..=5).min(2 * f as usize + 1), &mut rng);
        let b = rng.gen_range(1..=40u64);
        let t0: f64 = rng.gen();
        let y = |t: f64| s.eval(t);
        let (z, _) = frequency_hash(&y, b, 0.25, t0);
        let values: Vec<Complex64> = (0..b).map(|i| z(&i)).collect();
        let got = cyclic_dft(&values).unwrap();
        let want = hash_spectrum(&s, b, t0);
        for l in 0..b {
            let w = want.get(&l).copied().unwrap_or_default();
            err[4] = err[4].max((got.get(l) - w).norm());
        }
    }
    let worst = err.iter().fold(0.0f64, |a, e| a.max(*e));
    Verdict {
        pass: worst <= 1e-9,
        detail: format!(
            "max error {worst:.2e} (parseval/round trip {:.1e}, cyclic/torus {:.1e}, pullback {:.1e}, bucket {:.1e}, hash {:.1e}; tolerance 1e-9)",
            err[0], err[1], err[2], err[3], err[4]
        ),
        digest: format!("{err:?}"),
    }
}

// 2

/// Minimum over the vertices of `{Ax ⋈ b, lo ≤ x ≤ hi}`, or `None` when no vertex is feasible.
fn vertex_minimum(p: &LpProblem, c: &[f64], lo: &[f64], hi: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut planes: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for con in &p.constraints {
        let mut row = vec![0.0; n];
        for &(j, v) in &con.coeffs {
            row[j] += v;
        }
        planes.push((row, con.rhs, con.relation == Relation::Eq));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lo[j], false));
        planes.push((e, hi[j], false));
    }
    let feasible = |x: &[f64]| {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        x.iter().enumerate().all(|(j, v)| *v >= lo[j] - 1e-9 && *v <= hi[j] + 1e-9)
            && p.constraints.iter().zip(&planes).all(|(con, (row, rhs, _))| match con.relation {
                Relation::Le => dot(row) <= rhs + 1e-9,
                Relation::Ge => dot(row) >= rhs - 1e-9,
                Relation::Eq => (dot(row) - rhs).abs() <= 1e-9,
            })
    };
    let equalities: Vec<usize> = (0..planes.len()).filter(|&i| planes[i].2).collect();
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        if equalities.iter().all(|e| pick.contains(e)) {
            let a = DMatrix::from_fn(n, n, |i, j| planes[pick[i]].0[j]);
            let b = DVector::from_iterator(n, pick.iter().map(|&i| planes[i].1));
            let lu = a.full_piv_lu();
            if lu.is_invertible() && lu.determinant().abs() > 1e-10 {
                if let Some(x) = lu.solve(&b) {
                    let x: Vec<f64> = x.iter().copied().collect();
                    if feasible(&x) {
                        let v: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                        best = Some(best.map_or(v, |w: f64| w.min(v)));
                    }
                }
            }
        }
        // next n-subset in lexicographic order
        let total = planes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - n + i {
                pick[i] += 1;
                for j in i + 1..n {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn lp_correctness() -> Verdict {
    let mut rng = stream(SEED, &[2]);
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    let mut infeasible = 0;
    let mut digest = String::new();
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let rows = rng.gen_range(1..=10);
        let lo: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 0.0 } else { -3.0 }).collect();
        let hi: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 2.0 } else { 5.0 }).collect();
        let x0: Vec<f64> = (0..n).map(|j| rng.gen_range(lo[j]..=hi[j])).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut p = LpProblem::new();
        for j in 0..n {
            p.add_var(format!("x{j}"), c[j], lo[j], hi[j]);
        }
        for _ in 0..rows {
            let coeffs: Vec<(usize, f64)> =
                (0..n).map(|j| (j, (rng.gen_range(-10..=10) as f64) / 10.0)).filter(|&(_, v)| v != 0.0).collect();
            let at: f64 = coeffs.iter().map(|&(j, v)| v * x0[j]).sum();
            let u: f64 = rng.gen();
            let slack = rng.gen_range(-0.5..1.0);
            if u < 0.15 {
                p.add_constraint(coeffs, Relation::Eq, at);
            } else if u < 0.6 {
                p.add_constraint(coeffs, Relation::Le, at + slack);
            } else {
                p.add_constraint(coeffs, Relation::Ge, at - slack);
            }
        }
        let sol = solve_lp(&p).unwrap();
        match vertex_minimum(&p, &c, &lo, &hi) {
            Some(best) => {
                let gap = if sol.status == LpStatus::Optimal {
                    (sol.objective - best).abs().max(p.max_violation(&sol.values))
                } else {
                    f64::INFINITY
                };
                worst = worst.max(gap);
                if gap > 1e-7 {
                    mismatches += 1;
                }
                digest.push_str(&format!("{:.12e};", sol.objective));
            }
            None => {
                infeasible += 1;
                if sol.status != LpStatus::Infeasible {
                    mismatches += 1;
                }
                digest.push_str("infeasible;");
            }
        }
    }
    let mut median_misses = 0;
    for _ in 0..100 {
        let m = 2 * rng.gen_range(0..=250) + 1;
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let fit = l1_regression(&Samples::real(vec![vec![1.0]; m], y.clone())).unwrap();
        let mut sorted = y;
        sorted.sort_by(f64::total_cmp);
        if fit.coefs[0].re != sorted[m / 2] {
            median_misses += 1;
        }
        digest.push_str(&format!("{};", fit.coefs[0].re));
    }
    Verdict {
        pass: mismatches == 0 && median_misses == 0,
        detail: format!(
            "{mismatches}/200 LP mismatches vs vertex enumeration ({infeasible} infeasible), worst gap {worst:.1e} (tolerance 1e-7); {median_misses}/100 medians missed"
        ),
        digest,
    }
}

// 3

fn decoder_oracle() -> Verdict {
    let system = BooleanChars::full(3);
    let cfg = DecodeConfig { k: 1, delta: 0.25, eta: 1.0, ..Default::default() };
    let m = cfg.sample_count(8);
    let mut agree = 0;
    let mut digest = String::new();
    for t in 0..100u64 {
        let seed = derive_seed(SEED, &[3, t]);
        let mut rng = stream(seed, &[0]);
        let xi = FreqVec::from_index(3, rng.gen_range(0..8));
        let c = rng.gen_range(1.0..=2.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let truth = BooleanSpectrum::from_entries(3, [(xi, c)]).unwrap();
        let sig: Arc<dyn Signal<FreqVec>> = Arc::new(truth);
        let noise = NoiseParams::new(0.25, 0.0, NoiseModel::Random, OutlierStrategy::LargeConstant, derive_seed(seed, &[1]));
        let oracle = Oracle::new(sig, noise).unwrap();
        let (samples, clamped) = collect_samples(&system, &mut |x| oracle.query(x), m, cfg.clamp_level(), &mut rng);
        let lp = linear_decode_samples(&samples, &cfg, clamped).map(|r| r.support());
        let brute = k_sparse_bruteforce(&samples, 1).unwrap().support();
        if lp.as_ref() == Ok(&brute) {
            agree += 1;
        }
        digest.push_str(&format!("{lp:?}/{brute:?};"));
    }
    Verdict { pass: agree >= 95, detail: format!("{agree}/100 supports agree (need ≥ 95), m = {m}"), digest }
}

// 4, 6, 9

fn boolean_config(trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        name: "boolean".into(),
        algorithm: Algorithm::BooleanSfft,
        n: 10,
        k: 4,
        eta: 1.0,
        delta: 0.2,
        trials,
        seed: derive_seed(SEED, &[4]),
        coef_tolerance: Some(1.0 / 3.0),
        min_success_rate: Some(0.9),
        ..Default::default()
    };
    cfg.noise = NoiseParams::new(0.3, 0.02, NoiseModel::Random, OutlierStrategy::LargeConstant, 0);
    cfg.boolean.ell = Some(8);
    cfg.boolean.inner.samples = Some(450);
    cfg
}

fn lowdeg_config(trials: usize, noisy: bool) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        name: "lowdeg".into(),
        algorithm: Algorithm::LowDegree,
        n: 8,
        d: 1,
        delta: 0.01,
        trials,
        seed: derive_seed(SEED, &[6, noisy as u64]),
        ..Default::default()
    };
    if noisy {
        cfg.noise = NoiseParams::new(1.0 / 36.0 - 0.01, 0.01, NoiseModel::Adversarial, OutlierStrategy::Zero, 0);
        cfg.coef_tolerance = Some(10.0 * 0.01 / 0.01);
        cfg.min_success_rate = Some(0.95);
    } else {
        cfg.coef_tolerance = Some(1e-9);
        cfg.min_success_rate = Some(1.0);
    }
    cfg
}

fn granular_config(trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        name: "granular".into(),
        algorithm: Algorithm::Granular,
        bandlimit: 8,
        k: 2,
        eta: 0.5,
        delta: 0.2,
        trials,
        seed: derive_seed(SEED, &[9]),
        coef_tolerance: Some(1e-9),
        min_success_rate: Some(1.0),
        ..Default::default()
    };
    cfg.noise = NoiseParams::new(0.3, 1e-4, NoiseModel::Random, OutlierStrategy::LargeConstant, 0);
    cfg.granular.epsilon = 1e-4;
    cfg
}

fn experiment_digest(out: &ExperimentOutcome) -> String {
    reports_csv(out).unwrap()
}

fn boolean_end_to_end() -> Verdict {
    let start = Instant::now();
    let out = run_experiment(&boolean_config(30)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let s = &out.summary;
    Verdict {
        pass: s.successes >= 27 && secs < 600.0,
        detail: format!(
            "{}/30 exact supports with linf ≤ 1/3 (need ≥ 27), linf p95 {:.3}, {secs:.0} s (limit 600 s)",
            s.successes, s.linf_p95
        ),
        digest: experiment_digest(&out),
    }
}

// 5

struct TorusRun {
    exact: bool,
    modulus: u64,
    min_gap: Option<f64>,
    violations: usize,
    line: String,
}

fn torus_trial(trial: u64, noisy: bool) -> TorusRun {
    let seed = derive_seed(SEED, &[5, trial]);
    let Truth::Torus(truth) = truth_generator(TruthDomain::Torus { bandlimit: 1024, k: 3, granular: false }, 1.0, seed).unwrap()
    else {
        unreachable!()
    };
    let noise = if noisy {
        NoiseParams::new(0.25, 0.02, NoiseModel::Random, OutlierStrategy::LargeConstant, derive_seed(seed, &[1]))
    } else {
        NoiseParams::noiseless()
    };
    let sig: Arc<dyn Signal<f64>> = Arc::new(truth.clone());
    let oracle = Oracle::new(sig, noise).unwrap();
    let mut cfg = TorusSfftConfig {
        bandlimit: 1024,
        k: 3,
        delta: 0.25,
        eta: 1.0,
        prime_floor: Some(120),
        prime_pool_size: 10,
        seed: derive_seed(seed, &[2]),
        ..Default::default()
    };
    cfg.inner.samples = Some(150);
    let out = torus_sfft(&|t| oracle.query(&t), &cfg).unwrap();
    let gap = oracle.stats().min_separation;
    TorusRun {
        exact: out.spectrum.support() == truth.support(),
        modulus: out.modulus,
        min_gap: gap,
        violations: out.induction_violations(&truth),
        line: format!("{:?}|{}|{:?}|{:.12e};", out.spectrum.support(), out.modulus, gap, out.spectrum.linf_distance(&truth)),
    }
}

fn torus_end_to_end(trials: u64, noiseless: u64) -> Verdict {
    let start = Instant::now();
    let mut exact = 0;
    let mut separated = 0;
    let mut ratios = Vec::new();
    let mut digest = String::new();
    for t in 0..trials {
        let r = torus_trial(t, true);
        exact += r.exact as usize;
        let ratio = r.min_gap.map_or(0.0, |g| g * 2.0 * r.modulus as f64);
        if ratio >= 1.0 {
            separated += 1;
        }
        ratios.push(ratio);
        digest.push_str(&r.line);
    }
    let mut violations = 0;
    for t in 0..noiseless {
        let r = torus_trial(t, false);
        violations += r.violations;
        digest.push_str(&r.line);
    }
    let secs = start.elapsed().as_secs_f64();
    ratios.sort_by(f64::total_cmp);
    let largest = ratios.last().copied().unwrap_or(0.0);
    let need_sep = (0.95 * trials as f64).ceil() as usize;
    Verdict {
        pass: exact * 10 >= 9 * trials as usize && separated >= need_sep && violations == 0,
        detail: format!(
            "{exact}/{trials} exact frequency sets (need ≥ 90%); separation audit {separated}/{trials} runs with min gap ≥ 1/(2B) (need ≥ {need_sep}, largest min gap·2B {largest:.3}); {violations} induction violations over {noiseless} noiseless runs; {secs:.0} s"
        ),
        digest,
    }
}

fn lowdeg_adversarial() -> Verdict {
    let noisy = run_experiment(&lowdeg_config(20, true)).unwrap();
    let clean = run_experiment(&lowdeg_config(20, false)).unwrap();
    let (a, b) = (&noisy.summary, &clean.summary);
    Verdict {
        pass: a.successes >= 19 && b.successes == 20,
        detail: format!(
            "{}/20 within 10·ε/δ = 10 (need ≥ 19), worst linf {:.2e}; noiseless {}/20 exact (tolerance 1e-9), worst {:.1e}; m = {}",
            a.successes,
            a.linf_max,
            b.successes,
            b.linf_max,
            noisy.config.lowdeg_config(0).sample_count()
        ),
        digest: experiment_digest(&noisy) + &experiment_digest(&clean),
    }
}

// 7

fn hypercontractive() -> Verdict {
    let mut rng = stream(SEED, &[7]);
    let bases = [MonomialBasis::new(10, 1).unwrap(), MonomialBasis::new(10, 2).unwrap()];
    let mut violations = 0;
    let mut worst_mean = 0.0f64;
    let mut lowest = f64::INFINITY;
    let mut digest = String::new();
    for t in 0..500 {
        let basis = &bases[t % 2];
        let coefs: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rep = hypercontractive_lower_bound(&coefs, basis, 0, &mut rng).unwrap();
        let mean = cube_points(10)
            .map(|x| {
                basis.monomials().iter().zip(&coefs).map(|(s, c)| if s.dot(&x) { -c } else { *c }).sum::<f64>().abs()
            })
            .sum::<f64>()
            / 1024.0;
        let l2 = coefs.iter().map(|c| c * c).sum::<f64>().sqrt();
        worst_mean = worst_mean.max((mean - rep.mean_abs).abs());
        let ratio = mean / l2;
        lowest = lowest.min(ratio * 3f64.powi(basis.d() as i32));
        if !(ratio >= 3f64.powi(-(basis.d() as i32)) && ratio <= 1.0) || !rep.holds {
            violations += 1;
        }
        digest.push_str(&format!("{:.15e};", rep.ratio));
    }
    Verdict {
        pass: violations == 0 && worst_mean <= 1e-12,
        detail: format!(
            "{violations}/500 outside [3^-d, 1]; smallest ratio·3^d {lowest:.3}; enumeration mismatch {worst_mean:.1e}"
        ),
        digest,
    }
}

// 8

fn euclidean_section() -> Verdict {
    let delta = 0.01;
    let rho = 1.0 / 36.0 - 0.08;
    let cfg = LowDegConfig { n: 8, d: 1, delta, ..Default::default() };
    let basis = MonomialBasis::new(8, 1).unwrap();
    let mut rng = stream(SEED, &[8]);
    let m = cfg.sample_count();
    let points = uniform_points(8, m, &mut rng);
    let mut passes = 0;
    let mut errors = Vec::new();
    for _ in 0..100 {
        let coefs: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        match euclidean_section_check(&coefs, &basis, &points, rho, delta) {
            Ok(r) if r.passes() => passes += 1,
            Ok(_) => {}
            Err(e) => errors.push(e.to_string()),
        }
    }
    errors.dedup();
    Verdict {
        pass: passes >= 95,
        detail: format!(
            "{passes}/100 pass (need ≥ 95) at rho = {rho:.4}, m = {m}{}",
            if errors.is_empty() { String::new() } else { format!("; rejected: {}", errors.join(" | ")) }
        ),
        digest: format!("{passes}{errors:?}"),
    }
}

fn granular_decoder() -> Verdict {
    let start = Instant::now();
    let out = run_experiment(&granular_config(20)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    Verdict {
        pass: out.summary.successes == 20 && secs < 300.0,
        detail: format!("{}/20 exact (need 20), {secs:.1} s (limit 300 s)", out.summary.successes),
        digest: experiment_digest(&out),
    }
}

// 10

fn anticoncentration() -> Verdict {
    let mut rng = stream(SEED, &[10]);
    let nodes = 1 << 14;
    let mut worst_jensen = f64::INFINITY;
    let mut digest = String::new();
    for _ in 0..500 {
        let s = random_torus(16, rng.gen_range(1..=6), &mut rng);
        let j = jensen_check(&s, nodes).unwrap();
        worst_jensen = worst_jensen.min(j.slack);
        digest.push_str(&format!("{:.12e};", j.slack));
    }
    let mut worst_excess = f64::NEG_INFINITY;
    for alpha in [0.25, 0.5, 0.75] {
        for _ in 0..100 {
            let k = rng.gen_range(1..=5);
            let raw = random_torus(16, k, &mut rng);
            let norm = raw.l2();
            let s = TorusSpectrum::from_entries(16, raw.iter().map(|(&xi, &c)| (xi, c / norm))).unwrap();
            let eta = s.iter().map(|(_, c)| c.norm()).fold(f64::INFINITY, f64::min);
            let frac = anticoncentration_probe(&s, anticoncentration_level(eta, alpha), nodes).unwrap();
            worst_excess = worst_excess.max(frac - alpha);
            digest.push_str(&format!("{frac};"));
        }
    }
    let f = counterexample_signal(10).unwrap();
    let tau = counterexample_level(10, 0.5);
    let frac = anticoncentration_probe(&f, tau, nodes).unwrap();
    let energy = (0..nodes).map(|j| f.eval(j as f64 / nodes as f64).norm_sqr()).sum::<f64>() / nodes as f64;
    let peak = f.eval(0.0).norm() / (2f64.sqrt() * 10f64.powf(0.25));
    // |1 + e^{2πit}|^k / √C(2k, k), with C(20, 10) = 184756
    let direct = (0..nodes)
        .filter(|&j| {
            let t = j as f64 / nodes as f64;
            (character(0, t) + character(1, t)).norm().powi(10) / 184_756f64.sqrt() <= tau
        })
        .count() as f64
        / nodes as f64;
    digest.push_str(&format!("{frac}"));
    Verdict {
        pass: worst_jensen >= -1e-6 && worst_excess <= 0.05 && frac >= 0.5 && (frac - direct).abs() < 1e-12,
        detail: format!(
            "worst Jensen slack {worst_jensen:.2e} (need ≥ -1e-6); worst excess over alpha {worst_excess:.3} (limit 0.05); counterexample k = 10: Pr[|f| ≤ {tau:.4}] = {frac:.4} (need ≥ 0.5), energy {energy:.6}, peak/√2k^¼ {peak:.3}"
        ),
        digest,
    }
}

// 11

fn ell1_concentration() -> Verdict {
    let cfg = ConcentrationConfig { seed: derive_seed(SEED, &[11]), ..Default::default() };
    let row = run_concentration(&cfg).unwrap();
    let m = pilot_m(8.0, 4, 1024);
    let domain = Domain::Boolean { n: 10 };
    let kind = FamilyKind::RelaxedF { k: 4 };
    let at_m = ell1_deviation(&mut FamilySampler::new(kind, domain, cfg.seed).unwrap(), m, 200).unwrap();
    let at_2m = ell1_deviation(&mut FamilySampler::new(kind, domain, cfg.seed).unwrap(), 2 * m, 200).unwrap();
    let monotone = monotone_in_m(&at_m, &at_2m);
    Verdict {
        pass: row.pass && row.m == m && monotone,
        detail: format!(
            "m = {}, p95 {:.4} (limit 0.25), max {:.4}; mean deviation {:.4} at m vs {:.4} at 2m ({})",
            row.m,
            row.p95,
            row.max,
            at_m.mean,
            at_2m.mean,
            if monotone { "non-increasing at 3σ" } else { "increases beyond 3σ" }
        ),
        digest: format!("{row:?}{:?}{:?}", at_m.deviations, at_2m.deviations),
    }
}

fn main() {
    let total = Instant::now();
    let mut failed = Vec::new();
    let mut digests: Vec<(usize, String)> = Vec::new();
    let criteria: Vec<(usize, &str, fn() -> Verdict)> = vec![
        (1, "transform identities", transform_identities),
        (2, "LP correctness", lp_correctness),
        (3, "decoder vs brute force", decoder_oracle),
        (4, "boolean end-to-end", boolean_end_to_end),
        (5, "torus end-to-end", || torus_end_to_end(30, 10)),
        (6, "low-degree adversarial", lowdeg_adversarial),
        (7, "hypercontractive bound", hypercontractive),
        (8, "euclidean section", euclidean_section),
        (9, "granular decoder", granular_decoder),
        (10, "anti-concentration", anticoncentration),
        (11, "l1 concentration", ell1_concentration),
    ];
    for (id, title, run) in &criteria {
        let start = Instant::now();
        let v = run();
        report(*id, title, &v, start.elapsed().as_secs_f64());
        if !v.pass {
            failed.push(*id);
        }
        digests.push((*id, v.digest));
    }
    // repeated runs: cheap criteria in full, end-to-end experiments on their first trials
    let start = Instant::now();
    let mut differ = Vec::new();
    for (id, _, run) in &criteria {
        let first = &digests.iter().find(|(i, _)| i == id).unwrap().1;
        let same = match id {
            4 => first.starts_with(&experiment_digest(&run_experiment(&boolean_config(3)).unwrap())),
            5 => first.starts_with(&torus_end_to_end(3, 0).digest),
            6 => {
                let noisy = experiment_digest(&run_experiment(&lowdeg_config(3, true)).unwrap());
                let clean = experiment_digest(&run_experiment(&lowdeg_config(3, false)).unwrap());
                let header_len = clean.find('\n').unwrap() + 1;
                first.starts_with(&noisy) && first.contains(&clean[header_len..])
            }
            9 => first.starts_with(&experiment_digest(&run_experiment(&granular_config(3)).unwrap())),
            _ => run().digest == *first,
        };
        if !same {
            differ.push(*id);
        }
    }
    let v = Verdict {
        pass: differ.is_empty(),
        detail: format!(
            "repeated (config, seed) runs byte-identical for criteria 1-11{}",
            if differ.is_empty() { String::new() } else { format!(" except {differ:?}") }
        ),
        digest: String::new(),
    };
    report(12, "determinism", &v, start.elapsed().as_secs_f64());
    if !v.pass {
        failed.push(12);
    }
    println!("acceptance: {} of 12 criteria pass, {:.0} s total", 12 - failed.len(), total.elapsed().as_secs_f64());
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
