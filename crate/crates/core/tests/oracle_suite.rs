use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stopgap::criteria::SmoothingParams;
use stopgap::oracle::{self, GapWitness, VerificationConfig};
use stopgap::Error;

fn quick() -> VerificationConfig {
    VerificationConfig {
        sdg_samples: 10,
        witness_samples: 20,
        regularity_samples: 20,
        decomposition_samples: 4,
        probe: None,
        ..VerificationConfig::default()
    }
}

#[test]
fn quick_suite_passes_on_every_desk_family() {
    let report = oracle::run_verification(&quick()).unwrap();
    assert_eq!(report.families.len(), 6);
    for f in &report.families {
        assert!(f.passed, "{}: {:?}", f.label, f);
        assert!(f.sdg.max_abs_error <= oracle::SDG_TOLERANCE);
    }
    assert!(report.counterexamples.passed);
    assert!(report.charts.iter().all(|c| c.passed(oracle::CHART_TOLERANCE)));
    assert!(report.probe.is_none());
    assert!(report.passed);
}

#[test]
fn suite_is_seeded() {
    let a = serde_json::to_string(&oracle::run_verification(&quick()).unwrap()).unwrap();
    let b = serde_json::to_string(&oracle::run_verification(&quick()).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn empty_config_rejected() {
    let c = VerificationConfig { instances: Vec::new(), ..quick() };
    assert!(matches!(oracle::run_verification(&c), Err(Error::InvalidConfig(_))));
}

#[test]
fn witnesses_on_basis_pursuit() {
    let spec = oracle::desk_instances().into_iter().find(|s| s.family == stopgap::problem::Family::Bp).unwrap();
    let p = spec.build::<f64>().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for beta in [1e-3, 1.0, 50.0] {
        let z = oracle::random_point(&p, &mut rng);
        let w = GapWitness::new(&p, &z, SmoothingParams::equal(beta).unwrap()).unwrap();
        assert!(w.residuals(&p, &z).unwrap().within(oracle::WITNESS_TOLERANCE));
    }
}

#[test]
fn kkt_stays_one_while_gap_vanishes() {
    let eps: Vec<f64> = (1..=8).map(|k| 10f64.powi(-k)).collect();
    for row in oracle::counterexample_kkt_vs_og(&eps).unwrap() {
        assert!((row.derivative - 1.0).abs() <= 1e-12);
        assert!((row.gap - row.eps / 2.0).abs() <= 1e-12);
        assert!((row.og - row.eps / 2.0).abs() <= 1e-12);
    }
    for row in oracle::counterexample_kkt_vs_sdg(&[0.5, -0.1, 0.01]).unwrap() {
        let expected = row.x.abs() - row.x * row.x / 2.0;
        assert!((row.sdg - expected).abs() <= 1e-12);
        assert!((row.kkt - 1.0).abs() <= 1e-12);
    }
}
