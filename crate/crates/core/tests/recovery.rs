use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use robust_sfft::boolean_sfft::{boolean_sfft, ceil_log2, check_isolation, BooleanSfftConfig};
use robust_sfft::decode::{binomial, k_sparse_bruteforce, linear_decode, top_k, BooleanChars, CyclicChars, DecodeConfig};
use robust_sfft::lp::Samples;
use robust_sfft::noise::{adversarial_corrupt, permute_bits, NoiseModel, NoiseParams, Oracle, OutlierStrategy, Signal};
use robust_sfft::rng::stream;
use robust_sfft::spectral::{BooleanSpectrum, F2Matrix, FreqVec, TorusSpectrum};
use robust_sfft::torus_sfft::{is_prime, isolated_mod, phase_update, prime_pool, torus_sfft, TorusSfftConfig};

proptest! {
    #[test]
    fn binomial_matches_pascal(n in 0u64..60, k in 0u64..60) {
        let mut row = vec![1u128];
        for _ in 0..n {
            let mut next = vec![1u128; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        prop_assert_eq!(binomial(n, k), row.get(k as usize).copied().unwrap_or(0));
    }

    #[test]
    fn primes_match_trial_division(p in 0u64..5000) {
        let naive = p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0);
        prop_assert_eq!(is_prime(p), naive);
    }

    #[test]
    fn isolation_mod_matches_pairwise(freqs in prop::collection::vec(-500i64..500, 1..6), b in 2u64..40) {
        let iso = isolated_mod(&freqs, b);
        for (i, x) in freqs.iter().enumerate() {
            let alone = freqs.iter().enumerate().all(|(j, y)| j == i || (x - y).rem_euclid(b as i64) != 0);
            prop_assert_eq!(iso[i], alone);
        }
    }

    #[test]
    fn permutation_is_bijective(key in any::<u64>(), bits in 1u32..10) {
        let mut seen = vec![false; 1 << bits];
        for x in 0..1u64 << bits {
            let y = permute_bits(x, bits, key) as usize;
            prop_assert!(!seen[y]);
            seen[y] = true;
        }
    }

    #[test]
    fn phase_doubling_step(xi in -200i64..200, err in -3i64..=3, t0 in 0.0f64..1.0) {
        // with |apx − ξ| < 1/(4Δ) the step lands on ξ
        let delta = 0.1;
        let cz = Complex64::from_polar(1.3, 2.0 * std::f64::consts::PI * xi as f64 * t0);
        let cz2 = cz * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * xi as f64 * delta);
        prop_assert_eq!(phase_update(xi + err, cz, cz2, delta), Some(xi));
    }
}

#[test]
fn top_k_breaks_ties_by_index() {
    let c: Vec<Complex64> = [0.0, 2.0, -2.0, 1.0, 0.0].iter().map(|&v| Complex64::new(v, 0.0)).collect();
    assert_eq!(top_k(&c, 2), vec![1, 2]);
    assert_eq!(top_k(&c, 9), vec![1, 2, 3]);
}

#[test]
fn brute_force_guard() {
    let s = Samples::real(vec![vec![0.0; 40]; 40], vec![0.0; 40]);
    assert!(k_sparse_bruteforce(&s, 5).is_err());
}

#[test]
fn sign_decoder_recovers_noiseless_sparse_function() {
    let truth = BooleanSpectrum::from_entries(4, [(FreqVec::parse("0110").unwrap(), 1.5), (FreqVec::parse("1001").unwrap(), -1.0)]).unwrap();
    let system = BooleanChars::full(4);
    let cfg = DecodeConfig { k: 2, delta: 0.25, eta: 1.0, samples: Some(200), ..Default::default() };
    let mut rng = stream(3, &[]);
    let out = linear_decode(&mut |x: &FreqVec| Complex64::new(truth.eval(x).unwrap(), 0.0), &system, &cfg, &mut rng).unwrap();
    let support: Vec<FreqVec> = out.support().iter().map(|&j| system.chars()[j].clone()).collect();
    let mut want = truth.support();
    want.sort();
    let mut got = support.clone();
    got.sort();
    assert_eq!(got, want);
    for (j, c) in &out.coefs {
        assert!((c.re - truth.get(&system.chars()[*j])).abs() < 1e-6);
    }
}

#[test]
fn cyclic_decoder_survives_outliers() {
    let b = 11;
    let system = CyclicChars::new(b);
    let coef = Complex64::new(0.8, -0.9);
    let sig = move |x: &u64| coef * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (7 * x % b) as f64 / b as f64);
    let mut noise = stream(5, &[1]);
    let cfg = DecodeConfig { k: 1, delta: 0.25, eta: 1.0, samples: Some(300), ..Default::default() };
    let mut rng = stream(5, &[]);
    let mut y = |x: &u64| {
        use rand::Rng;
        if noise.gen::<f64>() < 0.2 {
            Complex64::new(50.0, 0.0)
        } else {
            sig(x)
        }
    };
    let out = linear_decode(&mut y, &system, &cfg, &mut rng).unwrap();
    assert_eq!(out.support(), vec![7]);
    assert!((out.get(7) - coef).norm() < 1e-6);
}

#[test]
fn random_outlier_rate_is_close_to_rho() {
    let truth: Arc<dyn Signal<FreqVec>> = Arc::new(BooleanSpectrum::from_entries(6, [(FreqVec::parse("000001").unwrap(), 1.0)]).unwrap());
    let oracle = Oracle::new(truth, NoiseParams::new(0.3, 0.05, NoiseModel::Random, OutlierStrategy::Zero, 11)).unwrap();
    let mut rng = stream(2, &[]);
    let mut within = true;
    for _ in 0..20_000 {
        let x = FreqVec::random(6, &mut rng);
        let v = oracle.query(&x);
        let f = if x.get(5) { -1.0 } else { 1.0 };
        within &= v.re == 0.0 || (v.re - f).abs() <= 0.05;
    }
    let st = oracle.stats();
    assert_eq!(st.query_count, 20_000);
    // 0.3 ± 4σ with σ ≈ 0.0032
    let rate = st.outlier_count as f64 / 20_000.0;
    assert!((rate - 0.3).abs() < 0.013, "{rate}");
    assert!(within);
}

#[test]
fn adversarial_set_has_exact_size() {
    let corrupted = (0..1u64 << 10).filter(|&i| adversarial_corrupt(&FreqVec::from_index(10, i), 0.25, 42)).count();
    assert_eq!(corrupted, 256);
    let x = FreqVec::from_index(10, 77);
    assert_eq!(adversarial_corrupt(&x, 0.25, 42), adversarial_corrupt(&x, 0.25, 42));
}

#[test]
fn isolation_check_on_identity() {
    let a = F2Matrix::identity(4);
    let freqs: Vec<FreqVec> = ["1000", "1001", "0100"].iter().map(|s| FreqVec::parse(s).unwrap()).collect();
    // first three coordinates of 1000 and 1001 coincide
    assert_eq!(check_isolation(&a, &freqs, 3).unwrap(), vec![false, false, true]);
    assert_eq!(check_isolation(&a, &freqs, 4).unwrap(), vec![true, true, true]);
    assert_eq!(ceil_log2(5), 3);
}

#[test]
fn boolean_sfft_noiseless() {
    let truth = BooleanSpectrum::from_entries(
        8,
        [(FreqVec::parse("10110001").unwrap(), 1.25), (FreqVec::parse("01000110").unwrap(), -1.0)],
    )
    .unwrap();
    let mut cfg = BooleanSfftConfig { k: 2, ell: Some(6), seed: 4, ..Default::default() };
    cfg.inner.samples = Some(120);
    let out = boolean_sfft(&|x| Complex64::new(truth.eval(x).unwrap(), 0.0), 8, &cfg).unwrap();
    assert_eq!(out.spectrum.support(), truth.support());
    assert!(out.spectrum.linf_distance(&truth) < 1e-6);
}

#[test]
fn torus_sfft_noiseless() {
    let truth = TorusSpectrum::from_entries(64, [(-37, Complex64::new(1.0, 0.5)), (12, Complex64::new(-1.2, 0.0))]).unwrap();
    let mut cfg = TorusSfftConfig { bandlimit: 64, k: 2, seed: 8, prime_floor: Some(40), prime_pool_size: 5, ..Default::default() };
    cfg.inner.samples = Some(80);
    let out = torus_sfft(&|t| truth.eval(t), &cfg).unwrap();
    assert_eq!(out.spectrum.support(), truth.support(), "modulus {}", out.modulus);
    assert!(out.spectrum.linf_distance(&truth) < 1e-6);
    assert_eq!(out.induction_violations(&truth), 0);
    let pool = prime_pool(40, 5).unwrap();
    assert_eq!(pool, vec![41, 43, 47, 53, 59]);
    assert!(pool.contains(&out.modulus));
}
