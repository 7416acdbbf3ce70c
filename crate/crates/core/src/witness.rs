//! Entanglement witnesses for the resource, the box cluster, the rotated GHZ
//! form of `|0_L⟩` and the Bell pairs of `|−y_L⟩`.
//!
//! A tilde on a site (`X~`) means the eigenstates of that measurement are
//! swapped, i.e. the site contributes `−X`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::code412::{logical_state, pair_state, LogicalBasis};
use crate::error::{Error, Result};
use crate::kernel::{cr, gates, Basis, CMatrix, PureState, QuantumState};
use crate::pauli::{Letter, PauliString, Phase};
use crate::sampling::{
    monte_carlo_uncertainty, sample_setting_counts, CountRecord, McEstimate, RngSeed, Setting,
};

/// Which coefficient set to use for the built-in witnesses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessVariant {
    /// Coefficients and tildes fixed so each witness reaches −1 on its target.
    #[default]
    Calibrated,
    /// Literal transcription of the source expressions.
    AsPrinted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessTerm {
    pub coefficient: f64,
    /// Letters only; the phase is always `+1`.
    pub pauli: PauliString,
    /// Sites whose outcome labels are swapped.
    pub tilde: BTreeSet<u8>,
}

impl WitnessTerm {
    pub fn sign(&self) -> f64 {
        if self.tilde.len().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Human-readable form over `qubits`, e.g. `"X~ I X~ I X~"`.
    pub fn label(&self, qubits: &[u8]) -> String {
        qubits
            .iter()
            .map(|&q| {
                let l = self.pauli.letter(q).as_char();
                if self.tilde.contains(&q) {
                    format!("{l}~")
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// `W = constant·I − Σ coefficient·sign·P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSpec {
    pub name: String,
    pub qubits: Vec<u8>,
    pub constant: f64,
    pub terms: Vec<WitnessTerm>,
}

impl WitnessSpec {
    /// Builds a witness from per-site tokens such as `"X~ I Z Y~"`, read
    /// against `qubits` in order.
    pub fn from_tokens(
        name: &str,
        qubits: &[u8],
        constant: f64,
        terms: &[(f64, &str)],
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(terms.len());
        for &(coefficient, text) in terms {
            let tokens: Vec<&str> = text.split_whitespace().collect();
            if tokens.len() != qubits.len() {
                return Err(Error::Parse(format!(
                    "term {text:?} has {} sites, witness acts on {}",
                    tokens.len(),
                    qubits.len()
                )));
            }
            let mut letters = Vec::new();
            let mut tilde = BTreeSet::new();
            for (&q, tok) in qubits.iter().zip(tokens) {
                let (body, swapped) = match tok.strip_suffix('~') {
                    Some(b) => (b, true),
                    None => (tok, false),
                };
                let letter = body
                    .chars()
                    .next()
                    .filter(|_| body.len() == 1)
                    .and_then(Letter::from_char)
                    .ok_or_else(|| Error::Parse(format!("bad site {tok:?} in {text:?}")))?;
                if swapped {
                    if letter == Letter::I {
                        return Err(Error::Parse(format!(
                            "identity cannot carry a tilde in {text:?}"
                        )));
                    }
                    tilde.insert(q);
                }
                letters.push((q, letter));
            }
            let pauli = PauliString::from_letters(Phase::ONE, letters);
            if pauli.is_identity_letters() {
                return Err(Error::Parse(format!("term {text:?} is the identity")));
            }
            out.push(WitnessTerm {
                coefficient,
                pauli,
                tilde,
            });
        }
        Ok(Self {
            name: name.to_string(),
            qubits: qubits.to_vec(),
            constant,
            terms: out,
        })
    }

    /// Same witness acting on `qubits` instead (site by site).
    pub fn relabel(&self, qubits: &[u8]) -> Result<Self> {
        if qubits.len() != self.qubits.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} acts on {} qubits, got {:?}",
                self.name,
                self.qubits.len(),
                qubits
            )));
        }
        let map = |q: u8| qubits[self.qubits.iter().position(|&x| x == q).expect("own qubit")];
        let terms = self
            .terms
            .iter()
            .map(|t| WitnessTerm {
                coefficient: t.coefficient,
                pauli: PauliString::from_letters(
                    Phase::ONE,
                    t.pauli.letters().map(|(q, l)| (map(q), l)),
                ),
                tilde: t.tilde.iter().map(|&q| map(q)).collect(),
            })
            .collect();
        Ok(Self {
            name: self.name.clone(),
            qubits: qubits.to_vec(),
            constant: self.constant,
            terms,
        })
    }

    /// Dense operator on `self.qubits` in that order.
    pub fn operator(&self) -> Result<CMatrix> {
        let mut w = gates::identity(self.qubits.len()) * cr(self.constant);
        for t in &self.terms {
            w -= t.pauli.dense_on(&self.qubits)? * cr(t.coefficient * t.sign());
        }
        Ok(w)
    }

    /// Measurement settings covering every term; terms are merged greedily
    /// into the first compatible setting and unused sites default to Z.
    pub fn settings(&self) -> Vec<Setting> {
        let mut groups: Vec<Vec<Option<Letter>>> = Vec::new();
        for t in &self.terms {
            let want: Vec<Option<Letter>> = self
                .qubits
                .iter()
                .map(|&q| Some(t.pauli.letter(q)).filter(|&l| l != Letter::I))
                .collect();
            let slot = groups.iter_mut().find(|g| {
                g.iter()
                    .zip(&want)
                    .all(|(a, b)| a.is_none() || b.is_none() || a == b)
            });
            match slot {
                Some(g) => {
                    for (a, b) in g.iter_mut().zip(&want) {
                        if a.is_none() {
                            *a = *b;
                        }
                    }
                }
                None => groups.push(want),
            }
        }
        groups
            .into_iter()
            .map(|g| {
                Setting(
                    self.qubits
                        .iter()
                        .zip(g)
                        .map(|(&q, l)| (q, letter_basis(l.unwrap_or(Letter::Z))))
                        .collect(),
                )
            })
            .collect()
    }
}

fn letter_basis(l: Letter) -> Basis {
    l.basis().expect("non-identity letter")
}

fn setting_covers(setting: &Setting, term: &WitnessTerm) -> bool {
    term.pauli
        .letters()
        .all(|(q, l)| setting.basis_of(q) == Some(letter_basis(l)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermValue {
    pub term: String,
    pub coefficient: f64,
    /// Signed expectation, tildes included.
    pub expectation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessValue {
    pub name: String,
    pub value: f64,
    pub terms: Vec<TermValue>,
}

impl WitnessValue {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("term,coefficient,expectation\n");
        for t in &self.terms {
            let _ = writeln!(s, "{},{:.12},{:.12}", t.term, t.coefficient, t.expectation);
        }
        s
    }

    pub fn to_svg(&self) -> String {
        let labels: Vec<String> = self.terms.iter().map(|t| t.term.clone()).collect();
        let values: Vec<f64> = self.terms.iter().map(|t| t.expectation).collect();
        crate::svg::bar_chart(
            &format!("{} = {:.4}", self.name, self.value),
            &labels,
            &values,
        )
    }
}

fn assemble(w: &WitnessSpec, expectations: Vec<f64>) -> WitnessValue {
    let mut value = w.constant;
    let terms = w
        .terms
        .iter()
        .zip(expectations)
        .map(|(t, e)| {
            value -= t.coefficient * e;
            TermValue {
                term: t.label(&w.qubits),
                coefficient: t.coefficient,
                expectation: e,
            }
        })
        .collect();
    WitnessValue {
        name: w.name.clone(),
        value,
        terms,
    }
}

/// `constant − Σ coefficient·⟨term⟩` on the exact state.
pub fn evaluate_witness<S: QuantumState>(rho: &S, w: &WitnessSpec) -> Result<WitnessValue> {
    for &q in &w.qubits {
        if !rho.has_qubit(q) {
            return Err(Error::UnknownQubit(q));
        }
    }
    let mut e = Vec::with_capacity(w.terms.len());
    for t in &w.terms {
        e.push(t.sign() * rho.expectation(&t.pauli.to_observable()?)?);
    }
    Ok(assemble(w, e))
}

/// Same estimate from count tables, one per setting.
pub fn estimate_witness(w: &WitnessSpec, records: &[CountRecord]) -> Result<WitnessValue> {
    let mut e = Vec::with_capacity(w.terms.len());
    for t in &w.terms {
        let rec = records
            .iter()
            .find(|r| setting_covers(&r.setting, t))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "no count table measures term {} of {}",
                    t.label(&w.qubits),
                    w.name
                ))
            })?;
        e.push(t.sign() * rec.parity_expectation(&t.pauli.support())?);
    }
    Ok(assemble(w, e))
}

/// Counts for every setting of `w`; setting `i` uses stream `i` of `seed`.
pub fn sample_witness_counts<S: QuantumState>(
    rho: &S,
    w: &WitnessSpec,
    counts_per_setting: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    w.settings()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            sample_setting_counts(
                rho,
                s,
                counts_per_setting,
                RngSeed::new(seed).with_stream(i as u64),
            )
        })
        .collect()
}

/// Point estimate from the counts plus a Monte Carlo error bar.
pub fn witness_with_uncertainty(
    w: &WitnessSpec,
    records: &[CountRecord],
    trials: usize,
    seed: u64,
) -> Result<(WitnessValue, McEstimate)> {
    let point = estimate_witness(w, records)?;
    let mc = monte_carlo_uncertainty(records, |r| Ok(estimate_witness(w, r)?.value), trials, seed)?;
    Ok((point, mc))
}

/// `(1 − W)/2`, clamped to `[0, 1]`.
pub fn fidelity_lower_bound(value: f64) -> f64 {
    ((1.0 - value) / 2.0).clamp(0.0, 1.0)
}

/// Visibility at which `v·ρ_ideal + (1−v)·I/2ⁿ` makes the witness vanish,
/// given its ideal value. `None` when the ideal value is not negative.
pub fn white_noise_threshold(w: &WitnessSpec, ideal_value: f64) -> Option<f64> {
    (ideal_value < 0.0).then(|| w.constant / (w.constant - ideal_value))
}

pub const WITNESS_NAMES: [&str; 4] = ["resource5", "box4", "ghz4", "pair2"];

fn resource5(variant: WitnessVariant) -> WitnessSpec {
    let (cx, cz) = match variant {
        WitnessVariant::Calibrated => (0.25, 0.5),
        WitnessVariant::AsPrinted => (0.125, 0.25),
    };
    let x = [
        "X~ I X~ I X~",
        "X~ I X~ X~ I",
        "X~ X~ I X~ X~",
        "X~ X~ I I I",
        "I X~ X~ I X~",
        "I X~ X~ X~ I",
        "I I I X~ X~",
    ];
    let z = ["Z Y~ I Y~ Z", "Z Y~ Y~ I I", "I I Y~ Y~ Z"];
    let terms: Vec<(f64, &str)> = x
        .iter()
        .map(|t| (cx, *t))
        .chain(z.iter().map(|t| (cz, *t)))
        .collect();
    WitnessSpec::from_tokens("resource5", &[1, 2, 3, 4, 5], 2.25, &terms).expect("literal witness")
}

fn box4(variant: WitnessVariant) -> WitnessSpec {
    let terms: &[&str] = match variant {
        // Generators K1, K2, K1K2 and K4, K5, K4K5 of the box cluster under
        // the local frame of the code, two settings in total.
        WitnessVariant::Calibrated => &[
            "X~ I Z~ Z",
            "I X~ Z~ Z",
            "X~ X~ I I",
            "Z Z~ X~ I",
            "Z Z~ I X~",
            "I I X~ X~",
        ],
        // The three-site literal term is padded with I on qubit 5.
        WitnessVariant::AsPrinted => &[
            "Z I X~ X~",
            "Z Z~ X~ I",
            "I X~ X~ I",
            "X~ X~ I Z",
            "X~ X~ I I",
            "I X~ Z~ Z",
        ],
    };
    let terms: Vec<(f64, &str)> = terms.iter().map(|t| (0.5, *t)).collect();
    WitnessSpec::from_tokens("box4", &[1, 2, 4, 5], 2.0, &terms).expect("literal witness")
}

fn ghz4(variant: WitnessVariant) -> WitnessSpec {
    let x: &[&str] = match variant {
        WitnessVariant::Calibrated => &[
            "X X I I",
            "X I X~ I",
            "X I I X~",
            "I X X~ I",
            "I X I X~",
            "I I X~ X~",
            "X X X~ X~",
        ],
        WitnessVariant::AsPrinted => &[
            "X X I I", "X I X I", "X I I X", "I X X I", "I X I X", "I I X X", "X X X X",
        ],
    };
    let terms: Vec<(f64, &str)> = std::iter::once((1.0, "Z Z Z~ Z~"))
        .chain(x.iter().map(|t| (0.25, *t)))
        .collect();
    WitnessSpec::from_tokens("ghz4", &[1, 2, 4, 5], 1.75, &terms).expect("literal witness")
}

fn pair2() -> WitnessSpec {
    WitnessSpec::from_tokens("pair2", &[1, 2], 1.0, &[(1.0, "Y~ Z"), (1.0, "X X")])
        .expect("literal witness")
}

pub fn builtin_witness(name: &str, variant: WitnessVariant) -> Result<WitnessSpec> {
    match name {
        "resource5" => Ok(resource5(variant)),
        "box4" => Ok(box4(variant)),
        "ghz4" => Ok(ghz4(variant)),
        "pair2" => Ok(pair2()),
        other => Err(Error::Parse(format!(
            "unknown witness {other:?} (expected one of {})",
            WITNESS_NAMES.join(", ")
        ))),
    }
}

pub fn builtin_witnesses(variant: WitnessVariant) -> Vec<WitnessSpec> {
    WITNESS_NAMES
        .iter()
        .map(|n| builtin_witness(n, variant).expect("known name"))
        .collect()
}

/// Ideal state each built-in witness is designed for, on the witness's
/// qubits (a relabelled `pair2` gets the pair state on its own qubits).
pub fn ideal_target(w: &WitnessSpec) -> Result<PureState> {
    match w.name.as_str() {
        "resource5" => Ok(crate::graph::build_resource()),
        "box4" => Ok(logical_state(LogicalBasis::Plus)),
        "ghz4" => Ok(logical_state(LogicalBasis::Zero)),
        "pair2" => {
            let [a, b] = w.qubits[..] else {
                return Err(Error::ShapeMismatch("pair2 acts on two qubits".into()));
            };
            Ok(pair_state([a, b]))
        }
        other => Err(Error::Parse(format!(
            "no ideal target for witness {other:?}"
        ))),
    }
}
