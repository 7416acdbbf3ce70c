//! Phased Pauli strings and conjugation by the small Clifford gate set used to
//! build and reshape the code's operators.
//!
//! A [`PauliString`] is `phase · ⊗_q P_q` with the phase tracked exactly in
//! `{±1, ±i}` and identity letters left implicit.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernel::{c, cr, gates, kron_all, CMatrix, Observable, C64};

/// Power of `i`, modulo 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `±1` for real phases.
    pub fn sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => cr(1.0),
            1 => c(0.0, 1.0),
            2 => cr(-1.0),
            _ => c(0.0, -1.0),
        }
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const NON_IDENTITY: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    pub fn matrix(self) -> CMatrix {
        match self {
            Letter::I => gates::identity(1),
            Letter::X => gates::pauli_x(),
            Letter::Y => gates::pauli_y(),
            Letter::Z => gates::pauli_z(),
        }
    }

    /// `self · other = phase · letter`.
    pub fn multiply(self, other: Letter) -> (Phase, Letter) {
        use Letter::*;
        match (self, other) {
            (I, p) | (p, I) => (Phase::ONE, p),
            (a, b) if a == b => (Phase::ONE, I),
            (X, Y) => (Phase::I, Z),
            (Y, X) => (Phase::MINUS_I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, Y) => (Phase::MINUS_I, X),
            (Z, X) => (Phase::I, Y),
            (X, Z) => (Phase::MINUS_I, Y),
            _ => unreachable!(),
        }
    }

    pub fn anticommutes(self, other: Letter) -> bool {
        self != Letter::I && other != Letter::I && self != other
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(ch: char) -> Option<Self> {
        match ch.to_ascii_uppercase() {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    /// Measurement basis of a non-identity letter.
    pub fn basis(self) -> Option<crate::kernel::Basis> {
        use crate::kernel::Basis;
        match self {
            Letter::I => None,
            Letter::X => Some(Basis::X),
            Letter::Y => Some(Basis::Y),
            Letter::Z => Some(Basis::Z),
        }
    }
}

impl From<crate::kernel::Basis> for Letter {
    fn from(b: crate::kernel::Basis) -> Self {
        match b {
            crate::kernel::Basis::X => Letter::X,
            crate::kernel::Basis::Y => Letter::Y,
            crate::kernel::Basis::Z => Letter::Z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PauliString {
    phase: Phase,
    letters: BTreeMap<u8, Letter>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: u8, letter: Letter) -> Self {
        Self::from_letters(Phase::ONE, [(qubit, letter)])
    }

    pub fn from_letters(phase: Phase, letters: impl IntoIterator<Item = (u8, Letter)>) -> Self {
        let mut out = Self {
            phase,
            letters: BTreeMap::new(),
        };
        for (q, l) in letters {
            out = out.multiply(&Self {
                phase: Phase::ONE,
                letters: if l == Letter::I {
                    BTreeMap::new()
                } else {
                    BTreeMap::from([(q, l)])
                },
            });
        }
        out
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn scaled(&self, phase: Phase) -> Self {
        Self {
            phase: self.phase * phase,
            letters: self.letters.clone(),
        }
    }

    pub fn letter(&self, qubit: u8) -> Letter {
        self.letters.get(&qubit).copied().unwrap_or(Letter::I)
    }

    pub fn letters(&self) -> impl Iterator<Item = (u8, Letter)> + '_ {
        self.letters.iter().map(|(&q, &l)| (q, l))
    }

    /// Non-identity qubits in ascending order.
    pub fn support(&self) -> Vec<u8> {
        self.letters.keys().copied().collect()
    }

    pub fn weight(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity_letters(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// Letters equal, phase ignored.
    pub fn same_letters(&self, other: &PauliString) -> bool {
        self.letters == other.letters
    }

    pub fn multiply(&self, other: &PauliString) -> PauliString {
        let mut phase = self.phase * other.phase;
        let mut letters = self.letters.clone();
        for (&q, &l) in &other.letters {
            let cur = letters.get(&q).copied().unwrap_or(Letter::I);
            let (p, r) = cur.multiply(l);
            phase = phase * p;
            if r == Letter::I {
                letters.remove(&q);
            } else {
                letters.insert(q, r);
            }
        }
        PauliString { phase, letters }
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        self.letters
            .iter()
            .filter(|(q, l)| l.anticommutes(other.letter(**q)))
            .count()
            % 2
            == 0
    }

    /// Dense matrix on `order` (first entry most significant). Letters outside
    /// `order` are an error.
    pub fn dense_on(&self, order: &[u8]) -> Result<CMatrix> {
        if let Some(q) = self.letters.keys().find(|q| !order.contains(q)) {
            return Err(Error::InvalidSupport(vec![*q]));
        }
        let mats: Vec<CMatrix> = order.iter().map(|&q| self.letter(q).matrix()).collect();
        Ok(kron_all(&mats) * self.phase.to_complex())
    }

    /// Dense matrix on the string's own support.
    pub fn dense(&self) -> CMatrix {
        self.dense_on(&self.support())
            .expect("support is contained in itself")
    }

    pub fn to_observable(&self) -> Result<Observable> {
        if !self.is_hermitian() {
            return Err(Error::NotHermitian(1.0));
        }
        Observable::new(self.dense(), self.support())
    }

    pub fn conjugate_by(&self, gate: &CliffordGate) -> PauliString {
        gate.conjugate(self)
    }
}

impl Mul for &PauliString {
    type Output = PauliString;
    fn mul(self, rhs: &PauliString) -> PauliString {
        self.multiply(rhs)
    }
}

impl Mul for PauliString {
    type Output = PauliString;
    fn mul(self, rhs: PauliString) -> PauliString {
        self.multiply(&rhs)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.phase != Phase::ONE {
            write!(f, "{} ", self.phase)?;
        }
        if self.letters.is_empty() {
            return f.write_str("I");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|(q, l)| format!("{}{}", l.as_char(), q))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts `"Y1 Z2 Z4 Y5"`, `"-1 X1"`, `"+i X3 Z1"`, `"-Z1Z2"` and `"I"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid Pauli string {s:?}"));
        let mut rest = s.trim();
        let mut phase = Phase::ONE;
        for (prefix, p) in [
            ("+1", Phase::ONE),
            ("-1", Phase::MINUS_ONE),
            ("+i", Phase::I),
            ("-i", Phase::MINUS_I),
            ("i", Phase::I),
            ("+", Phase::ONE),
            ("-", Phase::MINUS_ONE),
        ] {
            if let Some(r) = rest.strip_prefix(prefix) {
                // "+1" must not swallow a letter index and "i" must be a phase, not "I".
                let next = r.chars().next();
                if next.is_none_or(|ch| ch.is_whitespace() || ch.is_ascii_alphabetic()) {
                    phase = p;
                    rest = r.trim_start();
                    break;
                }
            }
        }
        let chars: Vec<char> = rest.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.is_empty() {
            return Err(bad());
        }
        let mut out = PauliString::identity().with_phase(phase);
        let mut i = 0;
        while i < chars.len() {
            let letter = Letter::from_char(chars[i]).ok_or_else(bad)?;
            i += 1;
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if start == i {
                if letter == Letter::I && chars.len() == 1 {
                    break;
                }
                return Err(bad());
            }
            let q: u8 = chars[start..i]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| bad())?;
            out = out.multiply(&PauliString::from_letters(Phase::ONE, [(q, letter)]));
        }
        Ok(out)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Gates whose conjugation action is tracked symbolically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CliffordGate {
    Cz(u8, u8),
    H(u8),
    /// diag(1, i)
    S(u8),
    /// √(−iZ)
    A(u8),
    /// √(iZ) = A†
    ADag(u8),
    /// √(−iX)
    B(u8),
    /// √(iX) = B†
    BDag(u8),
}

impl CliffordGate {
    pub fn targets(&self) -> Vec<u8> {
        match *self {
            CliffordGate::Cz(a, b) => vec![a, b],
            CliffordGate::H(q)
            | CliffordGate::S(q)
            | CliffordGate::A(q)
            | CliffordGate::ADag(q)
            | CliffordGate::B(q)
            | CliffordGate::BDag(q) => vec![q],
        }
    }

    /// Unitary on [`Self::targets`].
    pub fn matrix(&self) -> CMatrix {
        match self {
            CliffordGate::Cz(..) => gates::cz(),
            CliffordGate::H(_) => gates::hadamard(),
            CliffordGate::S(_) => gates::s_gate(),
            CliffordGate::A(_) => gates::sqrt_neg_i_z(),
            CliffordGate::ADag(_) => gates::sqrt_i_z(),
            CliffordGate::B(_) => gates::sqrt_neg_i_x(),
            CliffordGate::BDag(_) => gates::sqrt_i_x(),
        }
    }

    pub fn apply<S: crate::kernel::QuantumState>(&self, state: &S) -> Result<S> {
        state.apply_unitary(&self.matrix(), &self.targets())
    }

    /// Images `(g X_q g†, g Z_q g†)`.
    fn images(&self, q: u8) -> (PauliString, PauliString) {
        use Letter::*;
        let x = PauliString::single(q, X);
        let z = PauliString::single(q, Z);
        let y = PauliString::single(q, Y);
        match *self {
            CliffordGate::Cz(a, b) if q == a || q == b => {
                let other = if q == a { b } else { a };
                (x.multiply(&PauliString::single(other, Z)), z)
            }
            CliffordGate::H(t) if t == q => (z, x),
            CliffordGate::S(t) | CliffordGate::A(t) if t == q => (y, z),
            CliffordGate::ADag(t) if t == q => (y.scaled(Phase::MINUS_ONE), z),
            CliffordGate::B(t) if t == q => (x, y.scaled(Phase::MINUS_ONE)),
            CliffordGate::BDag(t) if t == q => (x, y),
            _ => (x, z),
        }
    }

    /// `g · p · g†`.
    pub fn conjugate(&self, p: &PauliString) -> PauliString {
        let mut out = PauliString::identity().with_phase(p.phase());
        for (q, l) in p.letters() {
            let (ix, iz) = self.images(q);
            let img = match l {
                Letter::I => PauliString::identity(),
                Letter::X => ix,
                Letter::Z => iz,
                // Y = i X Z
                Letter::Y => ix.multiply(&iz).scaled(Phase::I),
            };
            out = out.multiply(&img);
        }
        out
    }
}

impl fmt::Display for CliffordGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliffordGate::Cz(a, b) => write!(f, "CZ({a},{b})"),
            CliffordGate::H(q) => write!(f, "H({q})"),
            CliffordGate::S(q) => write!(f, "S({q})"),
            CliffordGate::A(q) => write!(f, "A({q})"),
            CliffordGate::ADag(q) => write!(f, "A†({q})"),
            CliffordGate::B(q) => write!(f, "B({q})"),
            CliffordGate::BDag(q) => write!(f, "B†({q})"),
        }
    }
}

pub fn pauli_multiply(p: &PauliString, q: &PauliString) -> PauliString {
    p.multiply(q)
}

pub fn pauli_commutes(p: &PauliString, q: &PauliString) -> bool {
    p.commutes(q)
}

pub fn conjugate_pauli(g: &CliffordGate, p: &PauliString) -> PauliString {
    g.conjugate(p)
}

/// The ancilla coupling `C_Z^T = CZ(1,3) CZ(2,3) CZ(4,3) CZ(5,3)`.
pub fn ancilla_coupling() -> [CliffordGate; 4] {
    [
        CliffordGate::Cz(1, 3),
        CliffordGate::Cz(2, 3),
        CliffordGate::Cz(4, 3),
        CliffordGate::Cz(5, 3),
    ]
}

/// Conjugation of `p` by [`ancilla_coupling`]: the expanded ("tilde") form of
/// an operator on the box code plus ancilla.
pub fn expand_through_coupling(p: &PauliString) -> PauliString {
    ancilla_coupling()
        .iter()
        .fold(p.clone(), |acc, g| g.conjugate(&acc))
}

/// Expands an ancilla operator (support on qubit 3 only) into the five-qubit
/// resource.
pub fn expand_logical(p: &PauliString) -> Result<PauliString> {
    let outside: Vec<u8> = p.support().into_iter().filter(|&q| q != 3).collect();
    if !outside.is_empty() {
        return Err(Error::InvalidSupport(outside));
    }
    Ok(expand_through_coupling(p))
}

/// Multiplies `p` by a stabilizer `s` of the target state; on that state the
/// result acts exactly like `p`.
pub fn reshape_by_stabilizer(p: &PauliString, s: &PauliString) -> PauliString {
    p.multiply(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn all_strings_on(qubits: &[u8]) -> Vec<PauliString> {
        let letters = [Letter::I, Letter::X, Letter::Y, Letter::Z];
        let mut out = vec![PauliString::identity()];
        for &q in qubits {
            out = out
                .into_iter()
                .flat_map(|p| {
                    letters
                        .iter()
                        .map(move |&l| p.multiply(&PauliString::from_letters(Phase::ONE, [(q, l)])))
                })
                .collect();
        }
        out
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        assert_eq!(ps("X1") * ps("Z1"), ps("-i Y1"));
    }

    #[test]
    fn s1_s2_product() {
        let prod = ps("Y1 Z2 Z4 Y5") * ps("Y1 Z2 Y4 Z5");
        assert_eq!(prod, ps("X4 X5"));
        let dense = ps("Y1 Z2 Z4 Y5").dense_on(&[1, 2, 4, 5]).unwrap()
            * ps("Y1 Z2 Y4 Z5").dense_on(&[1, 2, 4, 5]).unwrap();
        assert!(max_abs(&(dense - prod.dense_on(&[1, 2, 4, 5]).unwrap())) < 1e-12);
    }

    #[test]
    fn commutation_examples() {
        let s1 = ps("Y1 Z2 Z4 Y5");
        let s3 = ps("Z1 Y2 Y4 Z5");
        assert!(!ps("X2").commutes(&s1));
        assert!(ps("Z1").commutes(&s3));
        assert!(s1.commutes(&s1));
    }

    #[test]
    fn multiply_matches_dense_for_all_two_qubit_pairs() {
        let all = all_strings_on(&[1, 2]);
        for p in &all {
            for q in &all {
                let want = p.dense_on(&[1, 2]).unwrap() * q.dense_on(&[1, 2]).unwrap();
                let got = p.multiply(q).dense_on(&[1, 2]).unwrap();
                assert!(max_abs(&(want - got)) < 1e-12, "{p} * {q}");
                let pq = p.dense_on(&[1, 2]).unwrap() * q.dense_on(&[1, 2]).unwrap();
                let qp = q.dense_on(&[1, 2]).unwrap() * p.dense_on(&[1, 2]).unwrap();
                assert_eq!(p.commutes(q), max_abs(&(pq - qp)) < 1e-12);
            }
        }
    }

    #[test]
    fn conjugation_matches_dense_exhaustively() {
        let gates = [
            CliffordGate::Cz(1, 2),
            CliffordGate::Cz(2, 1),
            CliffordGate::H(1),
            CliffordGate::S(2),
            CliffordGate::A(1),
            CliffordGate::ADag(2),
            CliffordGate::B(1),
            CliffordGate::BDag(2),
        ];
        for g in gates {
            let u = crate::kernel::embed(
                &g.matrix(),
                &g.targets(),
                &crate::kernel::standard_labels(&[1, 2]),
            )
            .unwrap();
            for p in all_strings_on(&[1, 2]) {
                let img = g.conjugate(&p);
                let want = &u * p.dense_on(&[1, 2]).unwrap() * u.adjoint();
                assert!(
                    max_abs(&(want - img.dense_on(&[1, 2]).unwrap())) < 1e-12,
                    "{g} on {p}"
                );
                assert_eq!(p.is_hermitian(), img.is_hermitian());
            }
        }
    }

    #[test]
    fn cz_spreads_x() {
        assert_eq!(CliffordGate::Cz(1, 2).conjugate(&ps("X2")), ps("Z1 X2"));
        assert_eq!(CliffordGate::H(1).conjugate(&ps("X1")), ps("Z1"));
        assert_eq!(CliffordGate::A(1).conjugate(&ps("X1")), ps("Y1"));
    }

    #[test]
    fn expand_ancilla_operators() {
        assert_eq!(expand_logical(&ps("X3")).unwrap(), ps("Z1 Z2 X3 Z4 Z5"));
        assert_eq!(expand_logical(&ps("Z3")).unwrap(), ps("Z3"));
        let y = expand_logical(&ps("Y3")).unwrap();
        assert!(y.same_letters(&ps("Z1 Z2 Y3 Z4 Z5")));
        assert!(y.is_hermitian());
        assert!(matches!(
            expand_logical(&ps("X1")),
            Err(Error::InvalidSupport(_))
        ));
    }

    #[test]
    fn reshape_with_identity_is_noop() {
        let p = ps("Z1 Z2 X4");
        assert_eq!(reshape_by_stabilizer(&p, &PauliString::identity()), p);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(ps("Y1 Z2 Z4 Y5").to_string(), "Y1 Z2 Z4 Y5");
        assert_eq!(ps("-1 X1").to_string(), "-1 X1");
        assert_eq!(ps("+i X3 Z1").to_string(), "+i Z1 X3");
        assert_eq!(ps("-Z1Z2").to_string(), "-1 Z1 Z2");
        assert_eq!(ps("I"), PauliString::identity());
        assert_eq!(
            ps("-1 I"),
            PauliString::identity().with_phase(Phase::MINUS_ONE)
        );
        assert_eq!(ps("i Y4"), ps("+i Y4"));
        assert!("Q1".parse::<PauliString>().is_err());
        assert!("X".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }
}
