use graphcode::code412::{
    decode_no_loss, encode, inject_pauli_error, parse_error_spec, ProbeState,
};
use graphcode::experiment::{run_experiment, ExperimentConfig, ExperimentKind, Format};
use graphcode::kernel::Outcome;
use graphcode::noise::{ApplicationPoint, NoiseModel};
use graphcode::pipeline::{calibrate_visibility, encoding_chi, recovery_channel};
use graphcode::tomography::{process_fidelity, reconstruct_chi, ChiMatrix};

#[test]
fn encode_then_recover_is_identity_channel() {
    for lost in [1, 2, 4, 5] {
        let chi =
            reconstruct_chi(&recovery_channel(&NoiseModel::ideal(), Outcome::One, lost).unwrap())
                .unwrap();
        let f = process_fidelity(&chi, &ChiMatrix::identity()).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "lost {lost}: {f}");
    }
}

#[test]
fn noisy_encoding_degrades_smoothly() {
    let mut last = 1.0 + 1e-12;
    for v in [1.0, 0.9, 0.7, 0.5] {
        let chi = encoding_chi(
            &NoiseModel::white(v, ApplicationPoint::PostResource),
            Outcome::Zero,
            true,
        )
        .unwrap();
        let f = process_fidelity(&chi, &ChiMatrix::hadamard()).unwrap();
        assert!(f <= last + 1e-12);
        assert!(chi.is_physical());
        last = f;
    }
    assert!(last < 0.9);
}

#[test]
fn decoding_ignores_errors_on_qubit_four() {
    let a = ProbeState::PlusY.ancilla();
    let code = encode(&a, Some(Outcome::Zero))
        .unwrap()
        .corrected()
        .unwrap();
    let hit = inject_pauli_error(&code, &parse_error_spec("X@4").unwrap()).unwrap();
    let out = decode_no_loss(&hit).unwrap();
    assert!(out.fidelity_with(&a.to_state(1)).unwrap() > 1.0 - 1e-9);
}

#[test]
fn report_bundle_writes_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::LossRecovery);
    cfg.calibrate_fidelity = Some(0.78);
    let bundle = run_experiment(&cfg).unwrap();
    let paths = bundle
        .write_to(dir.path(), &[Format::Json, Format::Csv])
        .unwrap();
    assert!(paths
        .iter()
        .any(|p| p.extension().is_some_and(|e| e == "json")));
    assert!(paths
        .iter()
        .all(|p| p.extension().is_some_and(|e| e != "svg")));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["provenance"]["kind"], "loss-recovery");
    for r in summary["summary"]["recoveries"].as_array().unwrap() {
        let f = r["average_probe_fidelity"].as_f64().unwrap();
        assert!(f > 0.5 && f < 1.0, "{f}");
    }
}

#[test]
fn config_validation_collects_problems() {
    let text = r#"{"kind": "loss-recovery", "lost": [3], "sampling": {"trials": 3}}"#;
    match ExperimentConfig::from_json(text) {
        Err(graphcode::Error::Config(problems)) => assert!(problems.len() >= 2, "{problems:?}"),
        other => panic!("expected config error, got {other:?}"),
    }
    assert!(ExperimentConfig::from_json(r#"{"kind": "nope"}"#).is_err());
}

#[test]
fn calibration_is_monotone_in_target() {
    let a = calibrate_visibility(0.6).unwrap();
    let b = calibrate_visibility(0.9).unwrap();
    assert!(a < b);
}
