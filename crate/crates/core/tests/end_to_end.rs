use std::f64::consts::PI;

use qgate_core::campaign::{self, mcube_frequencies, records_from_outcomes, success_rate_curve};
use qgate_core::model::ProtocolFile;
use qgate_core::optimizer::{objective_error, run_multistart};
use qgate_core::oracle::compare_with_analytic;
use qgate_core::pathways::{bucket_amplitudes, mcube_point};
use qgate_core::{
    fidelity, gate_diagonal, ConstraintMode, ConstraintSpec, EnvelopeSpec, OptimizerConfig,
    ParameterVector, PulseSequence, Subsystem,
};

fn small_campaign(pulses: usize, starts: usize, seed: u64) -> OptimizerConfig {
    let mut cfg = OptimizerConfig::new(pulses, ConstraintSpec::new(0.1, ConstraintMode::AbsB).unwrap());
    cfg.n_starts = starts;
    cfg.seed = seed;
    cfg
}

#[test]
fn jaksch_protocol_through_the_public_api() {
    let text = r#"{"pulses":[{"area":3.141592653589793,"a":1,"b":0},
                             {"area":6.283185307179586,"a":0,"b":1},
                             {"area":3.141592653589793,"a":1,"b":0}]}"#;
    let seq = ProtocolFile::parse(text).unwrap();
    let g = gate_diagonal(&seq).unwrap();
    assert!((fidelity(&g).fidelity - 1.0).abs() < 1e-12);
    let m = mcube_point(&seq).unwrap();
    assert_eq!(m.v.omega, 7);
    assert_eq!(m.omega_t, 11);
    assert_eq!(seq, PulseSequence::jaksch());
}

#[test]
fn optimized_solution_agrees_with_integration() {
    let cfg = small_campaign(3, 40, 5);
    let outcomes = run_multistart(&cfg).unwrap();
    let best = outcomes.iter().min_by(|a, b| a.error.total_cmp(&b.error)).unwrap();
    assert!(best.error < 1e-6, "best error {}", best.error);

    let seq = best.params.to_sequence().unwrap();
    let dev = compare_with_analytic(&seq, &EnvelopeSpec::default(), EnvelopeSpec::default().default_dt()).unwrap();
    assert!(dev < 1e-6, "integration deviation {dev}");

    // The pathway buckets of the optimized protocol still add up to the gate.
    let g = gate_diagonal(&seq).unwrap();
    for s in Subsystem::ALL {
        assert!((bucket_amplitudes(&seq, s).unwrap().total() - g.get(s)).abs() < 1e-12);
    }
}

#[test]
fn campaign_records_survive_a_file_round_trip() {
    let cfg = small_campaign(2, 30, 11);
    let records = records_from_outcomes(&run_multistart(&cfg).unwrap(), &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.jsonl");
    campaign::persist(&records, &path).unwrap();
    let loaded = campaign::load(&path).unwrap();
    assert_eq!(loaded, records);

    let rates = success_rate_curve(&loaded, &[1e-1, 1e-3, 1e-7]).unwrap();
    assert!(rates.windows(2).all(|w| w[0].rate >= w[1].rate));
    if loaded.iter().any(|r| r.error <= 1e-3) {
        let m = mcube_frequencies(&loaded, 1e-3).unwrap();
        let total: f64 = m.entries.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn records_reproduce_their_stored_error() {
    let cfg = small_campaign(3, 10, 2);
    for r in records_from_outcomes(&run_multistart(&cfg).unwrap(), &cfg).unwrap() {
        let p = ParameterVector::new(r.areas.clone(), r.phis.clone());
        let recomputed = objective_error(&p, &cfg);
        assert!((recomputed - (r.error + cfg.penalty_weight * r.raw_penalty)).abs() < 1e-10);
        assert!(r.area_total <= 3.0 * 12.0 * PI + 1e-9);
    }
}
