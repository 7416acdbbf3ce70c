//! The [[4,1,2]] box-cluster code: logical operators and states, encoding by
//! measuring the ancilla, single-qubit Pauli errors and their syndromes, and
//! recovery after the loss of a known qubit.
//!
//! Outcome `s = 0` always means eigenvalue `+1`. Encoding with outcome `s₃`
//! leaves the logical byproduct `X̄^{s₃}` on the code.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{graph_state, Graph};
use crate::kernel::{
    c, cr, kets, partial_trace, Basis, CMatrix, CVector, DensityOperator, Outcome, PureState,
    QuantumState, C64, FORCE_TOL, FRAC_1_SQRT_2, NORM_TOL,
};
use crate::pauli::{expand_through_coupling, CliffordGate, Letter, PauliString, Phase};

/// Physical qubits of the code, in register order.
pub const CODE_QUBITS: [u8; 4] = [1, 2, 4, 5];
/// Ancilla consumed by the encoding measurement.
pub const ANCILLA: u8 = 3;

fn ps(s: &str) -> PauliString {
    s.parse().expect("literal Pauli string")
}

/// `S₁ = Y₁Z₂Z₄Y₅`, `S₂ = Y₁Z₂Y₄Z₅`, `S₃ = Z₁Y₂Y₄Z₅`.
pub fn syndrome_operators() -> [PauliString; 3] {
    [ps("Y1 Z2 Z4 Y5"), ps("Y1 Z2 Y4 Z5"), ps("Z1 Y2 Y4 Z5")]
}

/// All eight elements of the group generated by the syndrome operators,
/// identity first.
pub fn stabilizer_group() -> Vec<PauliString> {
    let [s1, s2, s3] = syndrome_operators();
    (0u8..8)
        .map(|mask| {
            [&s1, &s2, &s3]
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .fold(PauliString::identity(), |acc, (_, s)| acc.multiply(s))
        })
        .collect()
}

/// Normalized single-qubit state `α|0⟩ + β|1⟩` fed to the ancilla.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaState {
    alpha: C64,
    beta: C64,
}

impl AncillaState {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { alpha, beta })
    }

    /// `α = cos(θ/2)`, `β = e^{iφ} sin(θ/2)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self {
            alpha: cr((theta / 2.0).cos()),
            beta: C64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    /// Uniformly distributed on the Bloch sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        Self::from_angles((1.0 - 2.0 * u).acos(), 2.0 * std::f64::consts::PI * v)
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    /// `(e_x, e_y, e_z)` with `|ψ⟩⟨ψ| = ½(I + e_x X + e_y Y + e_z Z)`.
    pub fn bloch(&self) -> [f64; 3] {
        let cross = self.alpha.conj() * self.beta;
        [
            2.0 * cross.re,
            2.0 * cross.im,
            self.alpha.norm_sqr() - self.beta.norm_sqr(),
        ]
    }

    /// `(α', β') = ((α+β)/√2, (α−β)/√2)`.
    pub fn primed(&self) -> (C64, C64) {
        (
            (self.alpha + self.beta) * FRAC_1_SQRT_2,
            (self.alpha - self.beta) * FRAC_1_SQRT_2,
        )
    }

    pub fn to_state(&self, qubit: u8) -> PureState {
        PureState::qubit(qubit, self.alpha, self.beta).expect("normalized by construction")
    }
}

/// Informationally complete probe set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProbeState {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "+y")]
    PlusY,
}

impl ProbeState {
    pub const ALL: [ProbeState; 4] = [
        ProbeState::Zero,
        ProbeState::One,
        ProbeState::Plus,
        ProbeState::PlusY,
    ];

    pub fn ancilla(self) -> AncillaState {
        let h = FRAC_1_SQRT_2;
        let (alpha, beta) = match self {
            ProbeState::Zero => (cr(1.0), cr(0.0)),
            ProbeState::One => (cr(0.0), cr(1.0)),
            ProbeState::Plus => (cr(h), cr(h)),
            ProbeState::PlusY => (cr(h), c(0.0, h)),
        };
        AncillaState { alpha, beta }
    }

    /// Logical state the probe is encoded into (byproduct removed).
    pub fn encoded_logical(self) -> LogicalBasis {
        match self {
            ProbeState::Zero => LogicalBasis::Plus,
            ProbeState::One => LogicalBasis::Minus,
            ProbeState::Plus => LogicalBasis::Zero,
            ProbeState::PlusY => LogicalBasis::MinusY,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProbeState::Zero => "0",
            ProbeState::One => "1",
            ProbeState::Plus => "+",
            ProbeState::PlusY => "+y",
        }
    }
}

impl fmt::Display for ProbeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProbeState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(ProbeState::Zero),
            "1" => Ok(ProbeState::One),
            "+" => Ok(ProbeState::Plus),
            "+y" | "+Y" => Ok(ProbeState::PlusY),
            other => Err(Error::Parse(format!(
                "unknown probe {other:?} (expected 0, 1, +, +y)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalOperators {
    pub xbar: PauliString,
    pub zbar: PauliString,
    pub ybar: PauliString,
}

/// `X̄ = Z₁Z₂X₄`, `Z̄ = Z₁Z₂Z₄Z₅`, `Ȳ = iX̄Z̄`.
pub fn logical_ops() -> LogicalOperators {
    let xbar = ps("Z1 Z2 X4");
    let zbar = ps("Z1 Z2 Z4 Z5");
    let ybar = xbar.multiply(&zbar).scaled(Phase::I);
    LogicalOperators { xbar, zbar, ybar }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogicalBasis {
    Zero,
    One,
    Plus,
    Minus,
    PlusY,
    MinusY,
}

impl LogicalBasis {
    pub const ALL: [LogicalBasis; 6] = [
        LogicalBasis::Zero,
        LogicalBasis::One,
        LogicalBasis::Plus,
        LogicalBasis::Minus,
        LogicalBasis::PlusY,
        LogicalBasis::MinusY,
    ];

    /// Logical Bloch vector.
    pub fn bloch(self) -> [f64; 3] {
        match self {
            LogicalBasis::Zero => [0.0, 0.0, 1.0],
            LogicalBasis::One => [0.0, 0.0, -1.0],
            LogicalBasis::Plus => [1.0, 0.0, 0.0],
            LogicalBasis::Minus => [-1.0, 0.0, 0.0],
            LogicalBasis::PlusY => [0.0, 1.0, 0.0],
            LogicalBasis::MinusY => [0.0, -1.0, 0.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogicalBasis::Zero => "0_L",
            LogicalBasis::One => "1_L",
            LogicalBasis::Plus => "+_L",
            LogicalBasis::Minus => "-_L",
            LogicalBasis::PlusY => "+y_L",
            LogicalBasis::MinusY => "-y_L",
        }
    }
}

fn from_pairs_1542(amps: CVector) -> PureState {
    PureState::from_ids(&[1, 5, 4, 2], amps)
        .and_then(|s| s.reorder(&CODE_QUBITS))
        .expect("normalized literal")
}

/// `|0_L⟩ = (|φ⁻⟩₁₅|φ⁻⟩₄₂ − |ψ⁻⟩₁₅|ψ⁻⟩₄₂)/√2` on (1,2,4,5).
pub fn logical_zero() -> PureState {
    use kets::*;
    from_pairs_1542(
        (product(&[phi(-1.0), phi(-1.0)]) - product(&[psi(-1.0), psi(-1.0)])) * cr(FRAC_1_SQRT_2),
    )
}

/// `|1_L⟩ = (|ψ⁺⟩₁₅|φ⁺⟩₄₂ + |φ⁺⟩₁₅|ψ⁺⟩₄₂)/√2` on (1,2,4,5).
pub fn logical_one() -> PureState {
    use kets::*;
    from_pairs_1542(
        (product(&[psi(1.0), phi(1.0)]) + product(&[phi(1.0), psi(1.0)])) * cr(FRAC_1_SQRT_2),
    )
}

fn superpose(a: &PureState, b: &PureState, coeff: C64) -> PureState {
    PureState::from_ids(
        &CODE_QUBITS,
        (a.amplitudes() + b.amplitudes() * coeff) * cr(FRAC_1_SQRT_2),
    )
    .expect("orthonormal logical states")
}

pub fn logical_state(which: LogicalBasis) -> PureState {
    let (z, o) = (logical_zero(), logical_one());
    match which {
        LogicalBasis::Zero => z,
        LogicalBasis::One => o,
        LogicalBasis::Plus => superpose(&z, &o, cr(1.0)),
        LogicalBasis::Minus => superpose(&z, &o, cr(-1.0)),
        LogicalBasis::PlusY => superpose(&z, &o, c(0.0, 1.0)),
        LogicalBasis::MinusY => superpose(&z, &o, c(0.0, -1.0)),
    }
}

pub fn logical_basis_states() -> BTreeMap<LogicalBasis, PureState> {
    LogicalBasis::ALL
        .iter()
        .map(|&b| (b, logical_state(b)))
        .collect()
}

/// Box-cluster expansion
/// `½(|++00⟩ + |++11⟩ + |−−01⟩ + |−−10⟩)` on (1,2,4,5).
pub fn box_cluster_expansion() -> PureState {
    use kets::*;
    let amps = product(&[plus(), plus(), zero(), zero()])
        + product(&[plus(), plus(), one(), one()])
        + product(&[minus(), minus(), zero(), one()])
        + product(&[minus(), minus(), one(), zero()]);
    PureState::from_ids(&CODE_QUBITS, amps * cr(0.5)).expect("normalized literal")
}

/// Rotated GHZ form `(|+−−+⟩ + |−++−⟩)/√2`, with the tensor factors taken in
/// the pair order (1,5,4,2) of the Bell-pair decomposition.
pub fn rotated_ghz_zero() -> PureState {
    use kets::*;
    from_pairs_1542(
        (product(&[plus(), minus(), minus(), plus()])
            + product(&[minus(), plus(), plus(), minus()]))
            * cr(FRAC_1_SQRT_2),
    )
}

/// `(|++⟩ + i|−−⟩)/√2` on `pair`.
pub fn pair_state(pair: [u8; 2]) -> PureState {
    use kets::*;
    let amps = (product(&[plus(), plus()]) + product(&[minus(), minus()]) * c(0.0, 1.0))
        * cr(FRAC_1_SQRT_2);
    PureState::from_ids(&pair, amps).expect("normalized literal")
}

/// Five-qubit state `C_Z^T (|a⟩₃ ⊗ |box⟩₁₂₄₅) = α|0⟩₃|+_L⟩ + β|1⟩₃|−_L⟩`, in
/// register order (1,2,3,4,5). For `a = |+⟩` this is the resource state.
pub fn encoding_input(a: &AncillaState) -> PureState {
    let boxed = graph_state(&Graph::box_graph()).expect("four vertices");
    let joined = boxed
        .tensor(&a.to_state(ANCILLA))
        .and_then(|s| s.reorder(&[1, 2, 3, 4, 5]))
        .expect("disjoint labels");
    crate::pauli::ancilla_coupling()
        .iter()
        .try_fold(joined, |s, g| g.apply(&s))
        .expect("qubits exist")
}

/// Code state after the ancilla's X measurement.
#[derive(Clone, Debug)]
pub struct Encoded<S> {
    pub s3: Outcome,
    pub probability: f64,
    /// Raw post-measurement state, still carrying `X̄^{s₃}`.
    pub state: S,
}

impl<S: QuantumState> Encoded<S> {
    /// State with the byproduct removed.
    pub fn corrected(&self) -> Result<S> {
        remove_byproduct(&self.state, self.s3)
    }
}

/// Applies `X̄^{s₃}`.
pub fn remove_byproduct<S: QuantumState>(state: &S, s3: Outcome) -> Result<S> {
    match s3 {
        Outcome::Zero => Ok(state.clone()),
        Outcome::One => {
            let x = logical_ops().xbar;
            state.apply_unitary(&x.dense(), &x.support())
        }
    }
}

/// Measures qubit 3 of a five-qubit encoding input in the X basis.
pub fn encode_state<S: QuantumState>(input: &S, forced_s3: Option<Outcome>) -> Result<Encoded<S>> {
    let m = crate::kernel::projective_measure(input, ANCILLA, Basis::X, forced_s3)?;
    Ok(Encoded {
        s3: m.outcome,
        probability: m.probability,
        state: m.state,
    })
}

/// Encodes `a` into the code: output `X̄^{s₃}(α|+_L⟩ + β|−_L⟩)`.
pub fn encode(a: &AncillaState, forced_s3: Option<Outcome>) -> Result<Encoded<PureState>> {
    encode_state(&encoding_input(a), forced_s3)
}

/// Parses `"Z@1"`, `"X@4"`, `"none"`, or a Pauli string such as `"Y2"`.
pub fn parse_error_spec(spec: &str) -> Result<PauliString> {
    let s = spec.trim();
    if s.eq_ignore_ascii_case("none") || s == "I" {
        return Ok(PauliString::identity());
    }
    if let Some((letter, qubit)) = s.split_once('@') {
        let letter = letter
            .trim()
            .chars()
            .next()
            .and_then(Letter::from_char)
            .filter(|_| letter.trim().len() == 1)
            .ok_or_else(|| Error::Parse(format!("bad error type in {spec:?}")))?;
        let qubit: u8 = qubit
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad qubit in {spec:?}")))?;
        return Ok(PauliString::from_letters(Phase::ONE, [(qubit, letter)]));
    }
    s.parse()
}

/// Applies a weight ≤ 1 Pauli error on a code qubit.
pub fn inject_pauli_error<S: QuantumState>(state: &S, error: &PauliString) -> Result<S> {
    if error.weight() > 1 {
        return Err(Error::WeightTooHigh(error.weight()));
    }
    let outside: Vec<u8> = error
        .support()
        .into_iter()
        .filter(|q| !CODE_QUBITS.contains(q))
        .collect();
    if !outside.is_empty() {
        return Err(Error::InvalidSupport(outside));
    }
    if error.is_identity_letters() {
        return Ok(state.clone());
    }
    state.apply_unitary(
        &error.clone().with_phase(Phase::ONE).dense(),
        &error.support(),
    )
}

/// All twelve single-qubit Pauli errors on the code qubits.
pub fn single_qubit_errors() -> Vec<PauliString> {
    CODE_QUBITS
        .iter()
        .flat_map(|&q| Letter::NON_IDENTITY.map(|l| PauliString::single(q, l)))
        .collect()
}

/// Expectations of `S₁, S₂, S₃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyndromeRecord {
    pub values: [f64; 3],
}

impl SyndromeRecord {
    pub fn signs(&self) -> [i8; 3] {
        self.values.map(|v| if v >= 0.0 { 1 } else { -1 })
    }
}

pub fn measure_syndromes<S: QuantumState>(rho: &S) -> Result<SyndromeRecord> {
    let mut values = [0.0; 3];
    for (v, s) in values.iter_mut().zip(syndrome_operators()) {
        *v = rho.expectation(&s.to_observable()?)?;
    }
    Ok(SyndromeRecord { values })
}

/// `sign(⟨S_i E⟩)` on a code state: `−1` exactly where `E` anticommutes with `S_i`.
pub fn predicted_signs(error: &PauliString) -> [i8; 3] {
    syndrome_operators().map(|s| if s.commutes(error) { 1 } else { -1 })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Diagnosis {
    NoError,
    /// An error is present but cannot be located; the state should be discarded.
    DetectedUnlocatable {
        candidates: Vec<PauliString>,
    },
    Located {
        error: PauliString,
        correction: PauliString,
    },
    /// No single-qubit error (at the given location) produces this pattern.
    Inconsistent,
}

pub fn diagnose(signs: [i8; 3], known_location: Option<u8>) -> Diagnosis {
    if signs == [1, 1, 1] {
        return Diagnosis::NoError;
    }
    let candidates: Vec<PauliString> = single_qubit_errors()
        .into_iter()
        .filter(|e| predicted_signs(e) == signs)
        .collect();
    match known_location {
        None if candidates.is_empty() => Diagnosis::Inconsistent,
        None => Diagnosis::DetectedUnlocatable { candidates },
        Some(q) => {
            let at: Vec<PauliString> = candidates
                .into_iter()
                .filter(|e| e.support() == [q])
                .collect();
            match at.as_slice() {
                [] => Diagnosis::Inconsistent,
                [e] => Diagnosis::Located {
                    error: e.clone(),
                    correction: e.clone(),
                },
                _ => unreachable!("weight-1 patterns are unique per location"),
            }
        }
    }
}

/// Erasure of a known code qubit.
pub fn lose_qubit<S: QuantumState>(state: &S, q: u8) -> Result<DensityOperator> {
    if !CODE_QUBITS.contains(&q) || !state.has_qubit(q) {
        return Err(Error::UnknownQubit(q));
    }
    let keep: Vec<u8> = state.ids().into_iter().filter(|&i| i != q).collect();
    partial_trace(&state.to_density(), &keep)
}

/// How to recover the encoded qubit after qubit `lost` has been erased.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRecipe {
    pub lost: u8,
    /// Helper measurements in ascending qubit order.
    pub helpers: [(u8, Basis); 2],
    pub output: u8,
    /// Logical representatives without support on `lost`, used to derive the
    /// corrections.
    pub xbar_rep: PauliString,
    pub zbar_rep: PauliString,
    /// Pauli applied to the output for each helper-outcome pair (before the
    /// frame).
    pub corrections: BTreeMap<String, PauliString>,
    /// Fixed unitary applied last, undoing the Hadamard of the encoding and
    /// the local frame of the output qubit.
    #[serde(with = "crate::serde_matrix")]
    pub frame: CMatrix,
}

fn outcome_key(o: [Outcome; 2]) -> String {
    format!("{}{}", o[0].bit(), o[1].bit())
}

impl RecoveryRecipe {
    pub fn correction(&self, outcomes: [Outcome; 2]) -> &PauliString {
        &self.corrections[&outcome_key(outcomes)]
    }
}

/// Sign picked up by a representative once the helpers are measured.
fn branch_sign(rep: &PauliString, helpers: &[(u8, Basis); 2], outcomes: [Outcome; 2]) -> f64 {
    let mut sign = rep.phase().sign().expect("Hermitian representative");
    for ((q, _), o) in helpers.iter().zip(outcomes) {
        if rep.letter(*q) != Letter::I {
            sign *= o.eigenvalue();
        }
    }
    sign
}

fn single_letter_matrix(l: Letter) -> CMatrix {
    l.matrix()
}

/// Unitary `V` with `V Z V† = z_img` and `V X V† = x_img` (signed letters).
fn clifford_from_images(z_img: (f64, Letter), x_img: (f64, Letter)) -> CMatrix {
    let zm = single_letter_matrix(z_img.1) * cr(z_img.0);
    let xm = single_letter_matrix(x_img.1) * cr(x_img.0);
    let eig = nalgebra::SymmetricEigen::new(zm);
    let idx = if eig.eigenvalues[0] > eig.eigenvalues[1] {
        0
    } else {
        1
    };
    let up: CVector = eig.eigenvectors.column(idx).into_owned();
    let down = &xm * &up;
    CMatrix::from_columns(&[up, down])
}

/// Derives the recipe for the given helper assignment by searching the
/// stabilizer-equivalent forms of `X̄` and `Z̄` for ones that avoid the lost
/// qubit and act on each helper only with that helper's measured basis.
pub fn derive_recipe(lost: u8, output: u8, helpers: [(u8, Basis); 2]) -> Result<RecoveryRecipe> {
    let mut helpers = helpers;
    helpers.sort_by_key(|h| h.0);
    let mut qubits: Vec<u8> = helpers.iter().map(|h| h.0).collect();
    qubits.push(output);
    qubits.push(lost);
    qubits.sort();
    if qubits != CODE_QUBITS {
        return Err(Error::InvalidParameter(format!(
            "lost {lost}, output {output} and helpers {:?} must cover the code qubits",
            helpers.map(|h| h.0)
        )));
    }
    let fits = |p: &PauliString| {
        p.letter(lost) == Letter::I
            && p.letter(output) != Letter::I
            && helpers
                .iter()
                .all(|&(q, b)| matches!(p.letter(q), Letter::I) || p.letter(q) == Letter::from(b))
    };
    let group = stabilizer_group();
    let ops = logical_ops();
    let rep_of = |l: &PauliString| group.iter().map(|g| l.multiply(g)).find(|p| fits(p));
    let (xrep, zrep) = match (rep_of(&ops.xbar), rep_of(&ops.zbar)) {
        (Some(x), Some(z)) => (x, z),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "no logical representatives for lost {lost}, output {output}, helpers {helpers:?}"
            )))
        }
    };
    let p = xrep.letter(output);
    let q = zrep.letter(output);
    let r = match p.multiply(q).1 {
        Letter::I => unreachable!("representatives anticommute on the output"),
        l => l,
    };
    let zero = [Outcome::Zero, Outcome::Zero];
    let cx0 = branch_sign(&xrep, &helpers, zero);
    let cz0 = branch_sign(&zrep, &helpers, zero);
    // After encoding ⟨X̄⟩ = e_z and ⟨Z̄⟩ = e_x, so the frame must take
    // c_x·P to Z and c_z·Q to X.
    let frame = clifford_from_images((cx0, p), (cz0, q)).adjoint();
    let mut corrections = BTreeMap::new();
    for s1 in Outcome::BOTH {
        for s2 in Outcome::BOTH {
            let o = [s1, s2];
            let flip_x = branch_sign(&xrep, &helpers, o) != cx0;
            let flip_z = branch_sign(&zrep, &helpers, o) != cz0;
            let letter = match (flip_x, flip_z) {
                (false, false) => Letter::I,
                (true, false) => q,
                (false, true) => p,
                (true, true) => r,
            };
            corrections.insert(
                outcome_key(o),
                PauliString::from_letters(Phase::ONE, [(output, letter)]),
            );
        }
    }
    Ok(RecoveryRecipe {
        lost,
        helpers,
        output,
        xbar_rep: xrep,
        zbar_rep: zrep,
        corrections,
        frame,
    })
}

/// Every helper assignment for which [`derive_recipe`] succeeds.
pub fn recipe_candidates(lost: u8) -> Vec<RecoveryRecipe> {
    let rest: Vec<u8> = CODE_QUBITS.iter().copied().filter(|&q| q != lost).collect();
    let mut out = Vec::new();
    for &output in &rest {
        let h: Vec<u8> = rest.iter().copied().filter(|&q| q != output).collect();
        for b1 in Basis::ALL {
            for b2 in Basis::ALL {
                if let Ok(r) = derive_recipe(lost, output, [(h[0], b1), (h[1], b2)]) {
                    out.push(r);
                }
            }
        }
    }
    out
}

/// Box automorphism 4→1→5→2→4, which carries the lost-4 assignment onto the
/// lost-1 assignment and onward to lost 5 and lost 2.
fn rotate_label(q: u8) -> u8 {
    match q {
        4 => 1,
        1 => 5,
        5 => 2,
        2 => 4,
        other => other,
    }
}

/// Recipe for a lost code qubit. Lost 4 measures 2 in Z and 5 in X, with
/// the output on qubit 1. The other assignments are images of that one under [`rotate_label`];
/// corrections and frame are always derived.
pub fn recovery_recipe(lost: u8) -> Result<RecoveryRecipe> {
    if lost == ANCILLA {
        return Err(Error::InvalidParameter(
            "the ancilla is consumed by the encoding and cannot be recovered".into(),
        ));
    }
    if !CODE_QUBITS.contains(&lost) {
        return Err(Error::UnknownQubit(lost));
    }
    let (mut l, mut output, mut helpers) = (4u8, 1u8, [(2u8, Basis::Z), (5u8, Basis::X)]);
    while l != lost {
        l = rotate_label(l);
        output = rotate_label(output);
        helpers = helpers.map(|(q, b)| (rotate_label(q), b));
    }
    derive_recipe(lost, output, helpers)
}

#[derive(Clone, Debug)]
pub struct Recovery {
    /// Helper outcomes when a branch was forced; `None` for the
    /// outcome-averaged (feedforward-corrected) state.
    pub outcomes: Option<[Outcome; 2]>,
    pub probability: f64,
    pub state: DensityOperator,
}

fn corrected_output(
    rho: &DensityOperator,
    recipe: &RecoveryRecipe,
    outcomes: [Outcome; 2],
) -> Result<(f64, DensityOperator)> {
    let [(h1, b1), (h2, b2)] = recipe.helpers;
    let m1 = rho.measure_branch(h1, b1, outcomes[0])?;
    let m2 = m1.state.measure_branch(h2, b2, outcomes[1])?;
    let corr = recipe.correction(outcomes);
    let mut out = m2.state;
    if !corr.is_identity_letters() {
        out = out.apply_unitary(&corr.dense(), &corr.support())?;
    }
    out = out.apply_unitary(&recipe.frame, &[recipe.output])?;
    Ok((m1.probability * m2.probability, out))
}

/// Measures the helpers of `recipe` on the surviving three qubits, applies the
/// matching correction and the frame, and returns the output qubit.
pub fn recover(
    rho: &DensityOperator,
    recipe: &RecoveryRecipe,
    forced: Option<[Outcome; 2]>,
) -> Result<Recovery> {
    let mut expected: Vec<u8> = CODE_QUBITS
        .iter()
        .copied()
        .filter(|&q| q != recipe.lost)
        .collect();
    let mut got = rho.ids();
    expected.sort();
    got.sort();
    if got != expected {
        return Err(Error::ShapeMismatch(format!(
            "recovery after losing {} expects qubits {expected:?}, got {got:?}",
            recipe.lost
        )));
    }
    if let Some(o) = forced {
        let (probability, state) = corrected_output(rho, recipe, o)?;
        return Ok(Recovery {
            outcomes: Some(o),
            probability,
            state,
        });
    }
    let mut acc = CMatrix::zeros(2, 2);
    for s1 in Outcome::BOTH {
        for s2 in Outcome::BOTH {
            match corrected_output(rho, recipe, [s1, s2]) {
                Ok((p, st)) => acc += st.into_matrix() * cr(p),
                Err(Error::ZeroProbabilityBranch(p)) if p < FORCE_TOL => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Recovery {
        outcomes: None,
        probability: 1.0,
        state: DensityOperator::from_ids(&[recipe.output], acc)?,
    })
}

/// Decodes an intact code state with the lost-4 recipe; qubit 4 is never
/// measured.
pub fn decode_no_loss<S: QuantumState>(state: &S) -> Result<DensityOperator> {
    let recipe = recovery_recipe(4)?;
    let rho = lose_qubit(state, 4)?;
    Ok(recover(&rho, &recipe, None)?.state)
}

/// Tilde operators used when reshaping the expanded logical operators.
pub fn expanded_stabilizer(s: &PauliString) -> PauliString {
    expand_through_coupling(s)
}

/// Convenience: the box-cluster generator `K_v` lifted through the ancilla
/// coupling.
pub fn expanded_box_generator(v: u8) -> PauliString {
    expand_through_coupling(&crate::graph::stabilizer_generator(&Graph::box_graph(), v))
}

#[doc(hidden)]
pub fn _gate_for_tests(g: CliffordGate) -> CMatrix {
    g.matrix()
}
