use proptest::prelude::*;

use robust_sfft::harness::{
    reports_csv, run_experiment, truth_generator, write_outputs, Algorithm, ExperimentConfig, Truth, TruthDomain, CSV_HEADER,
};
use robust_sfft::lab::{
    family_f_membership, isolation_rate, pilot_m, run_concentration, structured_candidates, Claim, ConcentrationConfig,
    Domain, FamilyKind, FamilySampler, IsolationDomain, LabFunction,
};
use robust_sfft::noise::NoiseParams;
use robust_sfft::rng::stream;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_members_satisfy_membership(seed in any::<u64>(), k in 1usize..=6, which in 0usize..3) {
        let (kind, domain) = match which {
            0 => (FamilyKind::KSparse { k }, Domain::Boolean { n: 8 }),
            1 => (FamilyKind::RelaxedF { k }, Domain::Boolean { n: 8 }),
            _ => (FamilyKind::RelaxedF { k }, Domain::Torus { bandlimit: 40 }),
        };
        let mut s = FamilySampler::new(kind, domain, seed).unwrap();
        let h = s.sample().unwrap();
        let m = family_f_membership(&h, k).unwrap();
        prop_assert!(m.member, "{m:?}");
        // membership bound recomputed from the definition
        prop_assert!(h.l1() <= 2.0 * (k as f64).sqrt() * h.l2() * (1.0 + 1e-12));
    }

    #[test]
    fn truths_have_requested_shape(seed in any::<u64>(), k in 1usize..=5) {
        match truth_generator(TruthDomain::Boolean { n: 7, k }, 0.5, seed).unwrap() {
            Truth::Boolean(s) => {
                prop_assert_eq!(s.l0(), k);
                prop_assert!(s.iter().all(|(_, c)| c.abs() >= 0.5 && c.abs() <= 1.0));
            }
            Truth::Torus(_) => prop_assert!(false),
        }
    }
}

#[test]
fn pilot_sample_size() {
    // 8·16·ln 1024 = 887.2
    assert_eq!(pilot_m(8.0, 4, 1024), 888);
}

#[test]
fn single_sparse_always_isolated() {
    let rate = isolation_rate(IsolationDomain::Boolean { n: 8, ell: 3 }, 1, 50, 1).unwrap();
    assert_eq!(rate, 1.0);
    let rate = isolation_rate(IsolationDomain::Torus { bandlimit: 100, prime_floor: 5, pool_size: 3 }, 1, 50, 1).unwrap();
    assert_eq!(rate, 1.0);
}

#[test]
fn structured_candidates_are_members() {
    let mut rng = stream(3, &[]);
    for (name, h) in structured_candidates(8, 4, &mut rng).unwrap() {
        assert!(family_f_membership(&h, 4).unwrap().member, "{name}");
        assert!((h.l2() - 1.0).abs() < 1e-12, "{name}");
    }
}

#[test]
fn mean_abs_by_enumeration() {
    let mut s = FamilySampler::new(FamilyKind::KSparse { k: 3 }, Domain::Boolean { n: 6 }, 7).unwrap();
    let h = s.sample().unwrap();
    let LabFunction::Boolean(spec) = &h else { panic!("boolean domain") };
    let want = robust_sfft::spectral::cube_points(6).map(|x| spec.eval(&x).unwrap().abs()).sum::<f64>() / 64.0;
    assert!((h.mean_abs().unwrap() - want).abs() < 1e-12);
}

#[test]
fn family_claim_passes() {
    let cfg = ConcentrationConfig { claim: Claim::Family, trials: 30, ..Default::default() };
    let row = run_concentration(&cfg).unwrap();
    assert!(row.pass && row.p50 == 1.0);
}

fn small_granular() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        name: "small".into(),
        algorithm: Algorithm::Granular,
        bandlimit: 4,
        k: 2,
        eta: 0.5,
        trials: 4,
        seed: 12,
        coef_tolerance: Some(1e-9),
        min_success_rate: Some(1.0),
        ..Default::default()
    };
    cfg.noise = NoiseParams { rho: 0.2, epsilon: 1e-5, ..Default::default() };
    cfg.granular.epsilon = 1e-4;
    cfg
}

#[test]
fn experiments_are_reproducible_and_worker_independent() {
    let cfg = small_granular();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&ExperimentConfig { workers: 3, ..cfg.clone() }).unwrap();
    assert_eq!(reports_csv(&a).unwrap(), reports_csv(&b).unwrap());
    assert_eq!(a.summary.pass, Some(true));
    assert_eq!(reports_csv(&a).unwrap().lines().next().unwrap(), CSV_HEADER.join(","));
}

#[test]
fn outputs_written_by_name() {
    let dir = std::env::temp_dir().join(format!("robust-sfft-test-{}", std::process::id()));
    let out = run_experiment(&small_granular()).unwrap();
    let (csv, json) = write_outputs(&out, &dir).unwrap();
    assert_eq!(csv, dir.join("small.csv"));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(parsed.get("summary").is_some());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_json_round_trip() {
    let cfg = small_granular();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    assert!(ExperimentConfig::from_json(r#"{"algorithm": "granular", "typo": 1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"trials": 0}"#).unwrap().validate().is_err());
}
