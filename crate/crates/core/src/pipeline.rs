//! End-to-end flows shared by the experiment runner and the tests: noisy
//! encoding of probes, channel samples for encoding and loss recovery, and
//! calibration of the white-noise visibility against a target fidelity.

use crate::code412::{
    encode_state, encoding_input, logical_ops, logical_state, lose_qubit, pair_state, recover,
    recovery_recipe, remove_byproduct, AncillaState, ProbeState, RecoveryRecipe,
};
use crate::error::{Error, Result};
use crate::kernel::{gates, DensityOperator, Outcome, PureState, QuantumState};
use crate::noise::{apply_noise, ApplicationPoint, NoiseModel};
use crate::tomography::{
    logical_tomography, reconstruct_chi, state_fidelity, ChannelSample, ChiMatrix,
};
use crate::witness::{builtin_witness, WitnessSpec, WitnessVariant};

/// Noisy five-qubit resource `C_Z^T(|a⟩₃ ⊗ |box⟩)`; noise applies only for
/// the post-resource application point.
pub fn noisy_input(a: &AncillaState, noise: &NoiseModel) -> Result<DensityOperator> {
    let rho = encoding_input(a).to_density();
    match noise.application {
        ApplicationPoint::PostResource => apply_noise(&rho, noise),
        ApplicationPoint::PostEncoding => Ok(rho),
    }
}

/// Four-qubit code state after encoding `a` on branch `s3`, with the
/// byproduct removed when `correct` is set.
pub fn encoded_state(
    a: &AncillaState,
    noise: &NoiseModel,
    s3: Outcome,
    correct: bool,
) -> Result<DensityOperator> {
    let enc = encode_state(&noisy_input(a, noise)?, Some(s3))?;
    let mut rho = if correct {
        remove_byproduct(&enc.state, enc.s3)?
    } else {
        enc.state
    };
    if noise.application == ApplicationPoint::PostEncoding {
        rho = apply_noise(&rho, noise)?;
    }
    Ok(rho)
}

/// Channel from ancilla to logical qubit, sampled on the four probes.
pub fn encoding_channel(noise: &NoiseModel, s3: Outcome, correct: bool) -> Result<ChannelSample> {
    ChannelSample::from_fn(|p| {
        let rho = encoded_state(&p.ancilla(), noise, s3, correct)?;
        Ok(logical_tomography(&rho)?.matrix)
    })
}

pub fn encoding_chi(noise: &NoiseModel, s3: Outcome, correct: bool) -> Result<ChiMatrix> {
    reconstruct_chi(&encoding_channel(noise, s3, correct)?)
}

/// Output qubit after encoding, losing `recipe.lost`, and recovering with
/// feedforward over all helper outcomes.
pub fn recovered_state(
    a: &AncillaState,
    noise: &NoiseModel,
    s3: Outcome,
    recipe: &RecoveryRecipe,
) -> Result<DensityOperator> {
    let rho = encoded_state(a, noise, s3, true)?;
    Ok(recover(&lose_qubit(&rho, recipe.lost)?, recipe, None)?.state)
}

/// Ancilla-to-output channel through encoding, loss of `lost` and recovery.
pub fn recovery_channel(noise: &NoiseModel, s3: Outcome, lost: u8) -> Result<ChannelSample> {
    let recipe = recovery_recipe(lost)?;
    ChannelSample::from_fn(|p| Ok(recovered_state(&p.ancilla(), noise, s3, &recipe)?.into_matrix()))
}

/// Ideal four-qubit code state for a probe.
pub fn ideal_code_state(probe: ProbeState) -> PureState {
    logical_state(probe.encoded_logical())
}

/// Ideal logical-qubit ket `H|a⟩` on a one-qubit register labelled 1.
pub fn ideal_logical_ket(a: &AncillaState) -> PureState {
    let v = gates::hadamard() * a.to_state(1).amplitudes();
    PureState::from_ids(&[1], v).expect("unitary image is normalized")
}

/// `state_fidelity` of the encoded `|0⟩` probe with `|+_L⟩`.
pub fn encoded_zero_fidelity(noise: &NoiseModel) -> Result<f64> {
    let rho = encoded_state(&ProbeState::Zero.ancilla(), noise, Outcome::Zero, true)?;
    state_fidelity(&rho, &ideal_code_state(ProbeState::Zero))
}

/// Visibility `v` of post-resource white noise at which the encoded `|0⟩`
/// probe reaches `target` fidelity with `|+_L⟩`, by bisection.
pub fn calibrate_visibility(target: f64) -> Result<f64> {
    let f = |v: f64| encoded_zero_fidelity(&NoiseModel::white(v, ApplicationPoint::PostResource));
    let (mut lo, mut hi) = (0.0, 1.0);
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if !(f_lo..=f_hi).contains(&target) {
        return Err(Error::InvalidParameter(format!(
            "target fidelity {target} outside reachable range [{f_lo:.4}, {f_hi:.4}]"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Witnesses applicable to the encoded state of each probe, paired with
/// their ideal targets. The `|1⟩` probe gets the box witness conjugated by
/// `Z̄`, and `|+y⟩` gets the pair witness on both pairs.
pub fn probe_witnesses(
    probe: ProbeState,
    variant: WitnessVariant,
) -> Result<Vec<(WitnessSpec, PureState)>> {
    let target = ideal_code_state(probe);
    Ok(match probe {
        ProbeState::Zero => vec![(builtin_witness("box4", variant)?, target)],
        ProbeState::One => {
            let mut w = conjugate_witness(&builtin_witness("box4", variant)?, &logical_ops().zbar);
            w.name = "box4-minus".into();
            vec![(w, target)]
        }
        ProbeState::Plus => vec![(builtin_witness("ghz4", variant)?, target)],
        ProbeState::PlusY => {
            let w12 = builtin_witness("pair2", variant)?;
            let mut w45 = w12.relabel(&[4, 5])?;
            w45.name = "pair2@45".into();
            vec![(w12, pair_state([1, 2])), (w45, pair_state([4, 5]))]
        }
    })
}

/// `P W P†` for a Pauli `P`: every anticommuting term flips sign, which is
/// recorded by toggling the tilde on its first anticommuting site.
pub fn conjugate_witness(w: &WitnessSpec, p: &crate::pauli::PauliString) -> WitnessSpec {
    let mut out = w.clone();
    for t in &mut out.terms {
        if !t.pauli.commutes(p) {
            let site = t
                .pauli
                .letters()
                .find(|&(q, l)| l.anticommutes(p.letter(q)))
                .map(|(q, _)| q)
                .expect("anticommuting terms share a site");
            if !t.tilde.remove(&site) {
                t.tilde.insert(site);
            }
        }
    }
    out
}

/// State a named built-in witness is evaluated on under `noise`: the
/// resource for `resource5`, otherwise the matching encoded probe.
pub fn witness_state(name: &str, noise: &NoiseModel, s3: Outcome) -> Result<DensityOperator> {
    let probe = match name {
        "resource5" => {
            return noisy_input(&ProbeState::Plus.ancilla(), noise).and_then(|r| {
                if noise.application == ApplicationPoint::PostEncoding {
                    apply_noise(&r, noise)
                } else {
                    Ok(r)
                }
            })
        }
        "box4" => ProbeState::Zero,
        "ghz4" => ProbeState::Plus,
        "pair2" => ProbeState::PlusY,
        other => return Err(Error::Parse(format!("unknown witness {other:?}"))),
    };
    encoded_state(&probe.ancilla(), noise, s3, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::process_fidelity;
    use crate::witness::{evaluate_witness, fidelity_lower_bound};

    #[test]
    fn ideal_encoding_chi_is_hadamard() {
        for s3 in Outcome::BOTH {
            let chi = encoding_chi(&NoiseModel::ideal(), s3, true).unwrap();
            let f = process_fidelity(&chi, &ChiMatrix::hadamard()).unwrap();
            assert!((f - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn uncorrected_odd_branch_differs() {
        let chi = encoding_chi(&NoiseModel::ideal(), Outcome::One, false).unwrap();
        let f = process_fidelity(&chi, &ChiMatrix::hadamard()).unwrap();
        assert!(f < 0.5);
    }

    #[test]
    fn ideal_recovery_chi_is_identity() {
        for lost in crate::code412::CODE_QUBITS {
            let chi = reconstruct_chi(
                &recovery_channel(&NoiseModel::ideal(), Outcome::Zero, lost).unwrap(),
            )
            .unwrap();
            let f = process_fidelity(&chi, &ChiMatrix::identity()).unwrap();
            assert!((f - 1.0).abs() < 1e-10, "lost {lost}");
        }
    }

    #[test]
    fn calibration_hits_target() {
        let v = calibrate_visibility(0.78).unwrap();
        assert!((v - (0.78 - 1.0 / 16.0) / (15.0 / 16.0)).abs() < 1e-9);
        let f =
            encoded_zero_fidelity(&NoiseModel::white(v, ApplicationPoint::PostResource)).unwrap();
        assert!((f - 0.78).abs() < 1e-9);
        assert!(calibrate_visibility(0.01).is_err());
    }

    #[test]
    fn probe_witnesses_are_minus_one_ideally() {
        for probe in ProbeState::ALL {
            let rho =
                encoded_state(&probe.ancilla(), &NoiseModel::ideal(), Outcome::One, true).unwrap();
            for (w, target) in probe_witnesses(probe, WitnessVariant::Calibrated).unwrap() {
                let v = evaluate_witness(&rho, &w).unwrap().value;
                assert!((v + 1.0).abs() < 1e-9, "{probe} {}", w.name);
                let direct = evaluate_witness(&target, &w).unwrap().value;
                assert!((direct + 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn calibrated_noise_keeps_witnesses_negative() {
        let v = calibrate_visibility(0.78).unwrap();
        let noise = NoiseModel::white(v, ApplicationPoint::PostResource);
        for name in crate::witness::WITNESS_NAMES {
            let w = builtin_witness(name, WitnessVariant::Calibrated).unwrap();
            let rho = witness_state(name, &noise, Outcome::Zero).unwrap();
            let val = evaluate_witness(&rho, &w).unwrap().value;
            assert!(val < 0.0, "{name}: {val}");
            let ideal = crate::witness::ideal_target(&w).unwrap();
            let f = state_fidelity(&rho, &ideal).unwrap();
            assert!(f >= fidelity_lower_bound(val), "{name}");
        }
    }

    #[test]
    fn ideal_logical_ket_is_hadamard_image() {
        let k = ideal_logical_ket(&ProbeState::Plus.ancilla());
        assert!(k.equivalent(&PureState::zero(1)));
    }

    #[test]
    fn post_encoding_noise_acts_on_code() {
        let noise = NoiseModel::white(0.5, ApplicationPoint::PostEncoding);
        let f = encoded_zero_fidelity(&noise).unwrap();
        assert!((f - (0.5 + 0.5 / 16.0)).abs() < 1e-10);
    }
}
