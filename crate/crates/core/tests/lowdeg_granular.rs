use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use robust_sfft::granular::{
    anticoncentration_probe, counterexample_level, counterexample_signal, granular_decode, jensen_check, GranularConfig,
    GranularGrid,
};
use robust_sfft::lowdeg::{
    count_up_to, euclidean_section_check, fit_low_degree, hypercontractive_lower_bound, l2_concentration,
    monomial_features, uniform_points, MonomialBasis,
};
use robust_sfft::rng::{stream, SimRng};
use robust_sfft::spectral::{boolean_eval, cube_points, FreqVec, TorusSpectrum};

proptest! {
    #[test]
    fn features_match_character_values(n in 1usize..=9, d in 0usize..=3, seed in any::<u64>()) {
        let d = d.min(n);
        let basis = MonomialBasis::new(n, d).unwrap();
        let mut rng = SimRng::seed_from_u64(seed);
        let x = FreqVec::random(n, &mut rng);
        let coefs: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let feats = monomial_features(&x, &basis).unwrap();
        let via_features: f64 = feats.iter().zip(&coefs).map(|(a, b)| a * b).sum();
        let spec = basis.spectrum(&coefs).unwrap();
        prop_assert!((via_features - boolean_eval(&spec, &x).unwrap()).abs() < 1e-12);
        prop_assert_eq!(basis.coefficients(&spec).unwrap(), coefs);
    }

    #[test]
    fn basis_size_is_binomial_sum(n in 1usize..=12, d in 0usize..=4) {
        let d = d.min(n);
        let basis = MonomialBasis::new(n, d).unwrap();
        let brute = (0..1u64 << n).filter(|i| i.count_ones() as usize <= d).count();
        prop_assert_eq!(basis.len(), brute);
        prop_assert_eq!(count_up_to(n, d), brute as u128);
    }

    #[test]
    fn lattice_count_matches_enumeration(f in 1u64..=4, k in 1usize..=2, inv_eta in 1u32..=3) {
        let eta = 1.0 / inv_eta as f64;
        let grid = GranularGrid::new(f, k, eta).unwrap();
        // ordered amplitude tuples by nested loops over the square [-1/η, 1/η]²
        let r = (inv_eta * inv_eta) as i64;
        let s = inv_eta as i64;
        let mut cells = Vec::new();
        for a in -s..=s {
            for b in -s..=s {
                if a * a + b * b > 0 && a * a + b * b <= r {
                    cells.push(a * a + b * b);
                }
            }
        }
        let tuples = if k == 1 {
            cells.len()
        } else {
            cells.iter().flat_map(|u| cells.iter().map(move |v| u + v)).filter(|&e| e <= r).count()
        };
        let sets = robust_sfft::decode::binomial(2 * f + 1, k as u64) as usize;
        prop_assert_eq!(grid.count(), (sets * tuples) as u128);
        let all: Vec<TorusSpectrum> = grid.enumerate(u128::MAX).unwrap().collect();
        prop_assert_eq!(all.len(), sets * tuples);
        for w in all.windows(2) {
            prop_assert!(w[0] != w[1]);
        }
        prop_assert!(grid.count() <= grid.cardinality_bound());
    }

    #[test]
    fn jensen_slack_nonnegative(seed in any::<u64>(), k in 1usize..=5) {
        let mut rng = SimRng::seed_from_u64(seed);
        let mut s = TorusSpectrum::new(10);
        while s.l0() < k {
            s.insert(rng.gen_range(-10..=10), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap();
        }
        prop_assert!(jensen_check(&s, 1 << 12).unwrap().slack >= -1e-6);
    }
}

#[test]
fn noiseless_fit_is_exact() {
    let basis = MonomialBasis::new(5, 2).unwrap();
    let coefs: Vec<f64> = (0..basis.len()).map(|i| (i as f64 * 0.37).sin()).collect();
    let spec = basis.spectrum(&coefs).unwrap();
    let points: Vec<FreqVec> = cube_points(5).collect();
    let y: Vec<f64> = points.iter().map(|x| spec.eval(x).unwrap()).collect();
    let out = fit_low_degree(&points, &y, &basis).unwrap();
    for (a, b) in out.coefs.iter().zip(&coefs) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn hypercontractive_ratio_by_enumeration() {
    let basis = MonomialBasis::new(6, 2).unwrap();
    let mut rng = stream(4, &[]);
    for _ in 0..20 {
        let coefs: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = basis.spectrum(&coefs).unwrap();
        let mean = cube_points(6).map(|x| spec.eval(&x).unwrap().abs()).sum::<f64>() / 64.0;
        let rep = hypercontractive_lower_bound(&coefs, &basis, 0, &mut rng).unwrap();
        assert!((rep.mean_abs - mean).abs() < 1e-12);
        assert!(rep.holds && rep.ratio >= 1.0 / 9.0 && rep.ratio <= 1.0);
    }
}

#[test]
fn constant_polynomial_section_mass_is_rho() {
    let basis = MonomialBasis::new(4, 1).unwrap();
    let mut coefs = vec![0.0; basis.len()];
    coefs[0] = 2.0;
    let points = uniform_points(4, 100, &mut stream(1, &[]));
    let r = euclidean_section_check(&coefs, &basis, &points, 0.2, 0.1).unwrap();
    assert_eq!(r.subset, 20);
    assert!((r.top_mass / r.total_mass - 0.2).abs() < 1e-15);
    assert!(r.half && r.passes());
    assert!(euclidean_section_check(&coefs, &basis, &points, 0.001, 0.1).is_err());
}

#[test]
fn gram_matrix_concentrates() {
    let basis = MonomialBasis::new(6, 1).unwrap();
    let points = uniform_points(6, 20_000, &mut stream(2, &[]));
    let g = l2_concentration(&points, &basis, 0.1).unwrap();
    assert!(g.within && g.min_eigen > 0.9 && g.max_eigen < 1.1, "{g:?}");
}

#[test]
fn counterexample_is_normalized_and_concentrated() {
    for k in [1, 4, 10, 30] {
        let f = counterexample_signal(k).unwrap();
        assert!((f.l2() - 1.0).abs() < 1e-12);
        let tau = counterexample_level(k, 0.5);
        let frac = anticoncentration_probe(&f, tau, 1 << 13).unwrap();
        assert!(frac >= 0.5, "k = {k}: {frac}");
        assert!(anticoncentration_probe(&f, tau / 2.0, 1 << 13).unwrap() <= frac);
    }
}

#[test]
fn granular_decode_noiseless() {
    let truth = TorusSpectrum::from_entries(3, [(-1, Complex64::new(0.5, 0.0)), (2, Complex64::new(0.0, -0.5))]).unwrap();
    let cfg = GranularConfig { bandlimit: 3, k: 2, eta: 0.5, samples: Some(60), ..Default::default() };
    let out = granular_decode(&|t| truth.eval(t), &cfg).unwrap();
    assert_eq!(out.spectrum, Some(truth));
    assert!(out.checked > 0);
}
