use std::collections::BTreeMap;

use graphcode::code412::{
    encode, logical_ops, lose_qubit, recover, recovery_recipe, AncillaState, CODE_QUBITS,
};
use graphcode::kernel::Outcome;
use graphcode::noise::{apply_noise, ApplicationPoint, NoiseModel};
use graphcode::pauli::{Letter, PauliString, Phase};
use graphcode::pipeline::encoded_state;
use graphcode::sampling::{
    counts_from_csv, counts_to_csv, sample_setting_counts, RngSeed, Setting,
};
use graphcode::witness::{builtin_witness, evaluate_witness, fidelity_lower_bound, WitnessVariant};
use proptest::prelude::*;

fn letter() -> impl Strategy<Value = Letter> {
    prop_oneof![
        Just(Letter::I),
        Just(Letter::X),
        Just(Letter::Y),
        Just(Letter::Z)
    ]
}

fn pauli5() -> impl Strategy<Value = PauliString> {
    (prop::collection::vec(letter(), 5), 0u8..4).prop_map(|(ls, k)| {
        PauliString::from_letters(
            Phase::from_power(k),
            ls.into_iter().enumerate().map(|(i, l)| (i as u8 + 1, l)),
        )
    })
}

fn ancilla() -> impl Strategy<Value = AncillaState> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU)
        .prop_map(|(t, p)| AncillaState::from_angles(t, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_matches_dense(a in pauli5(), b in pauli5()) {
        let order = [1, 2, 3, 4, 5];
        let lhs = a.multiply(&b).dense_on(&order).unwrap();
        let rhs = a.dense_on(&order).unwrap() * b.dense_on(&order).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn commutation_is_symmetric_and_dense(a in pauli5(), b in pauli5()) {
        prop_assert_eq!(a.commutes(&b), b.commutes(&a));
        let order = [1, 2, 3, 4, 5];
        let (ma, mb) = (a.dense_on(&order).unwrap(), b.dense_on(&order).unwrap());
        let comm = &ma * &mb - &mb * &ma;
        prop_assert_eq!(a.commutes(&b), comm.norm() < 1e-9);
    }

    #[test]
    fn pauli_squares_to_identity_up_to_phase(a in pauli5()) {
        let sq = a.multiply(&a);
        prop_assert!(sq.is_identity_letters());
    }

    #[test]
    fn logical_operators_survive_reshaping(k in 0usize..3) {
        let ops = logical_ops();
        let s = &graphcode::code412::syndrome_operators()[k];
        for l in [&ops.xbar, &ops.zbar, &ops.ybar] {
            prop_assert!(l.commutes(s));
        }
    }

    #[test]
    fn noise_preserves_trace_and_hermiticity(
        a in ancilla(),
        p in 0.0..1.0f64,
        d in 0.0..1.0f64,
        v in 0.0..=1.0f64,
        q in prop::sample::select(CODE_QUBITS.to_vec()),
    ) {
        let mut noise = NoiseModel::white(v, ApplicationPoint::PostEncoding);
        noise.depolarizing.insert(q, p);
        noise.dephasing.insert(q, d);
        let rho = encoded_state(&a, &NoiseModel::ideal(), Outcome::Zero, true).unwrap();
        let out = apply_noise(&rho, &noise).unwrap();
        let m = out.matrix();
        prop_assert!((m.trace().re - 1.0).abs() < 1e-9);
        prop_assert!((m - m.adjoint()).norm() < 1e-9);
    }

    #[test]
    fn recovery_is_exact_for_random_inputs(
        a in ancilla(),
        lost in prop::sample::select(CODE_QUBITS.to_vec()),
        s3 in prop::sample::select(Outcome::BOTH.to_vec()),
    ) {
        let recipe = recovery_recipe(lost).unwrap();
        let code = encode(&a, Some(s3)).unwrap().corrected().unwrap();
        let out = recover(&lose_qubit(&code, lost).unwrap(), &recipe, None).unwrap();
        let f = out.state.fidelity_with(&a.to_state(recipe.output)).unwrap();
        prop_assert!(f > 1.0 - 1e-9);
    }

    #[test]
    fn sampling_is_deterministic_per_seed(seed in any::<u64>(), stream in 0u64..8) {
        let rho = encode(&AncillaState::from_angles(1.0, 0.3), Some(Outcome::Zero)).unwrap().corrected().unwrap();
        let setting: Setting = "X1Z2Y4X5".parse().unwrap();
        let s = RngSeed::new(seed).with_stream(stream);
        let a = sample_setting_counts(&rho, &setting, 300.0, s).unwrap();
        let b = sample_setting_counts(&rho, &setting, 300.0, s).unwrap();
        prop_assert_eq!(&a.counts, &b.counts);
        let back = counts_from_csv(&counts_to_csv(std::slice::from_ref(&a))).unwrap();
        let got: BTreeMap<String, u64> = back.into_iter().next().map(|r| r.counts).unwrap_or_default();
        prop_assert_eq!(got, a.counts);
    }

    #[test]
    fn fidelity_bound_is_clamped(w in -5.0..5.0f64) {
        let b = fidelity_lower_bound(w);
        prop_assert!((0.0..=1.0).contains(&b));
    }

    #[test]
    fn witness_is_affine_in_white_noise(v in 0.0..=1.0f64) {
        let w = builtin_witness("box4", WitnessVariant::Calibrated).unwrap();
        let rho = encoded_state(
            &graphcode::code412::ProbeState::Zero.ancilla(),
            &NoiseModel::white(v, ApplicationPoint::PostEncoding),
            Outcome::Zero,
            true,
        ).unwrap();
        let val = evaluate_witness(&rho, &w).unwrap().value;
        let want = -v + (1.0 - v) * w.constant;
        prop_assert!((val - want).abs() < 1e-9);
    }
}
