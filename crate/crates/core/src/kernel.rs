//! Dense state-vector and density-matrix substrate.
//!
//! Qubit 1 of a register is always the leftmost (most significant) tensor
//! factor of whatever label order the value carries, and computational basis
//! state `|0⟩` corresponds to horizontal polarization / first path. Every value
//! is immutable; operations return new values.

use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest register the dense backend accepts.
pub const MAX_QUBITS: usize = 6;
/// Tolerance for norm, trace, unitarity and Hermiticity checks.
pub const NORM_TOL: f64 = 1e-10;
/// Most negative eigenvalue a density operator may carry.
pub const EIGEN_TOL: f64 = 1e-9;
/// Two pure states are considered equal when `|⟨a|b⟩| ≥ 1 - OVERLAP_TOL`.
pub const OVERLAP_TOL: f64 = 1e-9;
/// Branches below this probability cannot be forced.
pub const FORCE_TOL: f64 = 1e-12;

pub(crate) const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Physical carrier of a qubit. Metadata only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Polarization,
    Path,
    Ancilla,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitLabel {
    pub id: u8,
    pub role: Role,
}

impl QubitLabel {
    pub fn new(id: u8, role: Role) -> Self {
        Self { id, role }
    }

    /// Label with the role used by the photonic experiment: qubits 1 and 5 are
    /// polarization qubits, 2 and 4 path qubits, and 3 the ancilla.
    pub fn standard(id: u8) -> Self {
        let role = match id {
            2 | 4 => Role::Path,
            3 => Role::Ancilla,
            _ => Role::Polarization,
        };
        Self { id, role }
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)
    }
}

pub fn standard_labels(ids: &[u8]) -> Vec<QubitLabel> {
    ids.iter().map(|&id| QubitLabel::standard(id)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// Eigenvector for `outcome`; outcome 0 is the +1 eigenvalue.
    pub fn eigenvector(self, outcome: Outcome) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        match (self, outcome) {
            (Basis::Z, Outcome::Zero) => [cr(1.0), cr(0.0)],
            (Basis::Z, Outcome::One) => [cr(0.0), cr(1.0)],
            (Basis::X, Outcome::Zero) => [cr(h), cr(h)],
            (Basis::X, Outcome::One) => [cr(h), cr(-h)],
            (Basis::Y, Outcome::Zero) => [cr(h), c(0.0, h)],
            (Basis::Y, Outcome::One) => [cr(h), c(0.0, -h)],
        }
    }

    pub fn matrix(self) -> CMatrix {
        match self {
            Basis::X => gates::pauli_x(),
            Basis::Y => gates::pauli_y(),
            Basis::Z => gates::pauli_z(),
        }
    }

    /// Unitary that rotates this basis onto the computational basis, so that
    /// outcome `s` lands on `|s⟩`.
    pub fn to_computational(self) -> CMatrix {
        match self {
            Basis::Z => gates::identity(1),
            Basis::X => gates::hadamard(),
            Basis::Y => &gates::hadamard() * gates::s_gate().adjoint(),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        }
    }

    pub fn from_letter(ch: char) -> Option<Self> {
        match ch.to_ascii_uppercase() {
            'X' => Some(Basis::X),
            'Y' => Some(Basis::Y),
            'Z' => Some(Basis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Single measurement outcome; `Zero` is the +1 eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Zero, Outcome::One];

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Outcome::Zero
        } else {
            Outcome::One
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }

    pub fn eigenvalue(self) -> f64 {
        match self {
            Outcome::Zero => 1.0,
            Outcome::One => -1.0,
        }
    }
}

/// Result of a projective single-qubit measurement. The measured qubit is no
/// longer part of `state`.
#[derive(Clone, Debug)]
pub struct Measurement<S> {
    pub outcome: Outcome,
    pub probability: f64,
    pub state: S,
}

/// Fixed matrices used across the crate.
pub mod gates {
    use super::{c, cr, CMatrix, FRAC_1_SQRT_2};

    pub fn identity(num_qubits: usize) -> CMatrix {
        CMatrix::identity(1 << num_qubits, 1 << num_qubits)
    }

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
    }

    pub fn hadamard() -> CMatrix {
        let h = FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[cr(h), cr(h), cr(h), cr(-h)])
    }

    /// Phase gate diag(1, i).
    pub fn s_gate() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), c(0.0, 1.0)])
    }

    /// Controlled-phase diag(1, 1, 1, -1).
    pub fn cz() -> CMatrix {
        let mut m = CMatrix::identity(4, 4);
        m[(3, 3)] = cr(-1.0);
        m
    }

    /// Principal square root of -iZ: diag(e^{-iπ/4}, e^{iπ/4}).
    pub fn sqrt_neg_i_z() -> CMatrix {
        let p = std::f64::consts::FRAC_PI_4;
        CMatrix::from_row_slice(
            2,
            2,
            &[c(p.cos(), -p.sin()), cr(0.0), cr(0.0), c(p.cos(), p.sin())],
        )
    }

    /// Principal square root of -iX: e^{-iπ/4 X}.
    pub fn sqrt_neg_i_x() -> CMatrix {
        let h = FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[cr(h), c(0.0, -h), c(0.0, -h), cr(h)])
    }

    /// Principal square root of iZ, the inverse of [`sqrt_neg_i_z`].
    pub fn sqrt_i_z() -> CMatrix {
        sqrt_neg_i_z().adjoint()
    }

    /// Principal square root of iX, the inverse of [`sqrt_neg_i_x`].
    pub fn sqrt_i_x() -> CMatrix {
        sqrt_neg_i_x().adjoint()
    }
}

/// Single-qubit amplitude vectors and Kronecker helpers for writing states out
/// term by term.
pub mod kets {
    use super::{c, cr, CVector, FRAC_1_SQRT_2};

    pub fn zero() -> CVector {
        CVector::from_vec(vec![cr(1.0), cr(0.0)])
    }

    pub fn one() -> CVector {
        CVector::from_vec(vec![cr(0.0), cr(1.0)])
    }

    pub fn plus() -> CVector {
        CVector::from_vec(vec![cr(FRAC_1_SQRT_2), cr(FRAC_1_SQRT_2)])
    }

    pub fn minus() -> CVector {
        CVector::from_vec(vec![cr(FRAC_1_SQRT_2), cr(-FRAC_1_SQRT_2)])
    }

    pub fn plus_y() -> CVector {
        CVector::from_vec(vec![cr(FRAC_1_SQRT_2), c(0.0, FRAC_1_SQRT_2)])
    }

    pub fn minus_y() -> CVector {
        CVector::from_vec(vec![cr(FRAC_1_SQRT_2), c(0.0, -FRAC_1_SQRT_2)])
    }

    /// Kronecker product, first factor most significant.
    pub fn product(factors: &[CVector]) -> CVector {
        factors
            .iter()
            .fold(CVector::from_element(1, cr(1.0)), |acc, f| acc.kronecker(f))
    }

    /// `(|00⟩ ± |11⟩)/√2`
    pub fn phi(sign: f64) -> CVector {
        (product(&[zero(), zero()]) + product(&[one(), one()]) * cr(sign)) * cr(FRAC_1_SQRT_2)
    }

    /// `(|01⟩ ± |10⟩)/√2`
    pub fn psi(sign: f64) -> CVector {
        (product(&[zero(), one()]) + product(&[one(), zero()]) * cr(sign)) * cr(FRAC_1_SQRT_2)
    }
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Kronecker product of a sequence of matrices (first factor most significant).
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

fn validate_labels(labels: &[QubitLabel]) -> Result<()> {
    if labels.len() > MAX_QUBITS {
        return Err(Error::TooManyQubits(labels.len()));
    }
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.id) {
            return Err(Error::LabelCollision(l.id));
        }
    }
    Ok(())
}

fn position(labels: &[QubitLabel], id: u8) -> Result<usize> {
    labels
        .iter()
        .position(|l| l.id == id)
        .ok_or(Error::UnknownQubit(id))
}

fn positions(labels: &[QubitLabel], ids: &[u8]) -> Result<Vec<usize>> {
    let mut seen = HashSet::new();
    ids.iter()
        .map(|&id| {
            if !seen.insert(id) {
                return Err(Error::LabelCollision(id));
            }
            position(labels, id)
        })
        .collect()
}

#[inline]
fn bit_at(index: usize, pos: usize, n: usize) -> usize {
    (index >> (n - 1 - pos)) & 1
}

/// Index restricted to the qubits at `pos` (first entry most significant).
#[inline]
fn sub_index(index: usize, pos: &[usize], n: usize) -> usize {
    pos.iter()
        .fold(0, |acc, &p| (acc << 1) | bit_at(index, p, n))
}

/// Writes the bits of `value` (most significant first) into the qubits at `pos`.
#[inline]
fn scatter(mut index: usize, value: usize, pos: &[usize], n: usize) -> usize {
    let k = pos.len();
    for (j, &p) in pos.iter().enumerate() {
        let b = (value >> (k - 1 - j)) & 1;
        let shift = n - 1 - p;
        index = (index & !(1 << shift)) | (b << shift);
    }
    index
}

/// Embeds `op`, acting on the qubits at `pos`, into an `n`-qubit operator.
fn embed_positions(op: &CMatrix, pos: &[usize], n: usize) -> CMatrix {
    let dim = 1 << n;
    let mask = pos.iter().fold(0usize, |m, &p| m | (1 << (n - 1 - p)));
    CMatrix::from_fn(dim, dim, |i, j| {
        if i & !mask == j & !mask {
            op[(sub_index(i, pos, n), sub_index(j, pos, n))]
        } else {
            cr(0.0)
        }
    })
}

/// Embeds `op` on `targets` into the full register described by `labels`.
pub fn embed(op: &CMatrix, targets: &[u8], labels: &[QubitLabel]) -> Result<CMatrix> {
    let pos = positions(labels, targets)?;
    let expected = 1 << pos.len();
    if op.nrows() != expected || op.ncols() != expected {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} operator on {} targets",
            op.nrows(),
            op.ncols(),
            pos.len()
        )));
    }
    Ok(embed_positions(op, &pos, labels.len()))
}

/// Permutation matrix-free reorder: returns `perm` with `new_index -> old_index`.
fn reorder_map(labels: &[QubitLabel], order: &[u8]) -> Result<(Vec<QubitLabel>, Vec<usize>)> {
    if order.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "reorder to {} labels on a {}-qubit register",
            order.len(),
            labels.len()
        )));
    }
    let pos = positions(labels, order)?;
    let n = labels.len();
    let new_labels = pos.iter().map(|&p| labels[p]).collect();
    let map = (0..1usize << n)
        .map(|new_idx| {
            let mut old = 0usize;
            for (j, &p) in pos.iter().enumerate() {
                old |= bit_at(new_idx, j, n) << (n - 1 - p);
            }
            old
        })
        .collect();
    Ok((new_labels, map))
}

/// Hermitian operator over a declared qubit subset.
#[derive(Clone, Debug)]
pub struct Observable {
    matrix: CMatrix,
    targets: Vec<u8>,
}

impl Observable {
    pub fn new(matrix: CMatrix, targets: Vec<u8>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} observable on {} qubits",
                matrix.nrows(),
                matrix.ncols(),
                targets.len()
            )));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > NORM_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let mut seen = HashSet::new();
        for &t in &targets {
            if !seen.insert(t) {
                return Err(Error::LabelCollision(t));
            }
        }
        Ok(Self { matrix, targets })
    }

    pub fn single(basis: Basis, qubit: u8) -> Self {
        Self {
            matrix: basis.matrix(),
            targets: vec![qubit],
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[u8] {
        &self.targets
    }

    pub fn max_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)
            .last()
            .copied()
            .unwrap_or(0.0)
    }
}

/// Common interface of pure and mixed states.
pub trait QuantumState: Clone + Sized {
    fn labels(&self) -> &[QubitLabel];
    fn apply_unitary(&self, u: &CMatrix, targets: &[u8]) -> Result<Self>;
    fn expectation(&self, obs: &Observable) -> Result<f64>;
    fn measure_branch(
        &self,
        qubit: u8,
        basis: Basis,
        outcome: Outcome,
    ) -> Result<Measurement<Self>>;
    fn branch_probability(&self, qubit: u8, basis: Basis, outcome: Outcome) -> Result<f64>;
    fn to_density(&self) -> DensityOperator;

    fn num_qubits(&self) -> usize {
        self.labels().len()
    }

    fn ids(&self) -> Vec<u8> {
        self.labels().iter().map(|l| l.id).collect()
    }

    fn has_qubit(&self, id: u8) -> bool {
        self.labels().iter().any(|l| l.id == id)
    }
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    let defect = unitarity_defect(u);
    if defect > NORM_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

/// Normalized state vector.
#[derive(Clone, Debug)]
pub struct PureState {
    labels: Vec<QubitLabel>,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(labels: Vec<QubitLabel>, amplitudes: CVector) -> Result<Self> {
        validate_labels(&labels)?;
        if amplitudes.len() != 1 << labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for {} qubits",
                amplitudes.len(),
                labels.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { labels, amplitudes })
    }

    /// Normalizes `amplitudes` before validation.
    pub fn from_unnormalized(labels: Vec<QubitLabel>, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm < FORCE_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(labels, amplitudes / cr(norm))
    }

    pub fn from_ids(ids: &[u8], amplitudes: CVector) -> Result<Self> {
        Self::new(standard_labels(ids), amplitudes)
    }

    pub fn qubit(id: u8, alpha: C64, beta: C64) -> Result<Self> {
        Self::from_ids(&[id], CVector::from_vec(vec![alpha, beta]))
    }

    pub fn basis_eigenstate(id: u8, basis: Basis, outcome: Outcome) -> Self {
        let [a, b] = basis.eigenvector(outcome);
        Self {
            labels: vec![QubitLabel::standard(id)],
            amplitudes: CVector::from_vec(vec![a, b]),
        }
    }

    pub fn zero(id: u8) -> Self {
        Self::basis_eigenstate(id, Basis::Z, Outcome::Zero)
    }

    pub fn one(id: u8) -> Self {
        Self::basis_eigenstate(id, Basis::Z, Outcome::One)
    }

    pub fn plus(id: u8) -> Self {
        Self::basis_eigenstate(id, Basis::X, Outcome::Zero)
    }

    pub fn minus(id: u8) -> Self {
        Self::basis_eigenstate(id, Basis::X, Outcome::One)
    }

    pub fn plus_y(id: u8) -> Self {
        Self::basis_eigenstate(id, Basis::Y, Outcome::Zero)
    }

    pub fn minus_y(id: u8) -> Self {
        Self::basis_eigenstate(id, Basis::Y, Outcome::One)
    }

    /// Product state `|+⟩^{⊗n}` on `ids`.
    pub fn all_plus(ids: &[u8]) -> Result<Self> {
        validate_labels(&standard_labels(ids))?;
        let dim = 1usize << ids.len();
        let amp = cr(1.0 / (dim as f64).sqrt());
        Self::from_ids(ids, CVector::from_element(dim, amp))
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Same state with the tensor factors permuted into `order`.
    pub fn reorder(&self, order: &[u8]) -> Result<Self> {
        let (labels, map) = reorder_map(&self.labels, order)?;
        let amplitudes = CVector::from_iterator(map.len(), map.iter().map(|&o| self.amplitudes[o]));
        Ok(Self { labels, amplitudes })
    }

    /// `⟨self|other⟩`, with `other` reordered to this state's label order.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        let other = other.reorder(&self.ids())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    /// Global-phase-insensitive equality.
    pub fn equivalent(&self, other: &PureState) -> bool {
        self.overlap(other)
            .map(|o| o >= 1.0 - OVERLAP_TOL)
            .unwrap_or(false)
    }

    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        tensor_product(self, other)
    }

    /// Applies an arbitrary (not necessarily unitary) operator and returns the
    /// raw, unnormalized vector.
    pub(crate) fn apply_operator_raw(&self, op: &CMatrix, targets: &[u8]) -> Result<CVector> {
        let full = embed(op, targets, &self.labels)?;
        Ok(full * &self.amplitudes)
    }

    fn project(&self, qubit: u8, basis: Basis, outcome: Outcome) -> Result<(f64, CVector)> {
        let p = position(&self.labels, qubit)?;
        let n = self.labels.len();
        let e = basis.eigenvector(outcome);
        let rest: Vec<usize> = (0..n).filter(|&q| q != p).collect();
        let dim = 1usize << (n - 1);
        let v = CVector::from_fn(dim, |a, _| {
            let base = scatter(0, a, &rest, n);
            (0..2)
                .map(|x| e[x].conj() * self.amplitudes[scatter(base, x, &[p], n)])
                .sum()
        });
        Ok((v.norm_squared(), v))
    }

    fn remaining_labels(&self, qubit: u8) -> Vec<QubitLabel> {
        self.labels
            .iter()
            .copied()
            .filter(|l| l.id != qubit)
            .collect()
    }
}

impl QuantumState for PureState {
    fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    fn apply_unitary(&self, u: &CMatrix, targets: &[u8]) -> Result<Self> {
        check_unitary(u)?;
        let amplitudes = self.apply_operator_raw(u, targets)?;
        Ok(Self {
            labels: self.labels.clone(),
            amplitudes,
        })
    }

    fn expectation(&self, obs: &Observable) -> Result<f64> {
        let v = self.apply_operator_raw(&obs.matrix, &obs.targets)?;
        Ok(self.amplitudes.dotc(&v).re)
    }

    fn branch_probability(&self, qubit: u8, basis: Basis, outcome: Outcome) -> Result<f64> {
        Ok(self.project(qubit, basis, outcome)?.0)
    }

    fn measure_branch(
        &self,
        qubit: u8,
        basis: Basis,
        outcome: Outcome,
    ) -> Result<Measurement<Self>> {
        let (probability, v) = self.project(qubit, basis, outcome)?;
        if probability < FORCE_TOL {
            return Err(Error::ZeroProbabilityBranch(probability));
        }
        let state = Self {
            labels: self.remaining_labels(qubit),
            amplitudes: v / cr(probability.sqrt()),
        };
        Ok(Measurement {
            outcome,
            probability,
            state,
        })
    }

    fn to_density(&self) -> DensityOperator {
        DensityOperator {
            labels: self.labels.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Density operator on a labelled register.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    labels: Vec<QubitLabel>,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validated constructor: Hermitian, unit trace, non-negative spectrum.
    pub fn new(labels: Vec<QubitLabel>, matrix: CMatrix) -> Result<Self> {
        validate_labels(&labels)?;
        let dim = 1usize << labels.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} density matrix for {} qubits",
                matrix.nrows(),
                matrix.ncols(),
                labels.len()
            )));
        }
        let rho = Self { labels, matrix };
        rho.check_physical()?;
        Ok(rho)
    }

    pub fn from_ids(ids: &[u8], matrix: CMatrix) -> Result<Self> {
        Self::new(standard_labels(ids), matrix)
    }

    /// Skips the spectrum check; used for operator-valued intermediate results
    /// such as channel images of non-positive basis elements.
    pub fn from_matrix_unchecked(labels: Vec<QubitLabel>, matrix: CMatrix) -> Self {
        Self { labels, matrix }
    }

    pub fn maximally_mixed(ids: &[u8]) -> Result<Self> {
        let labels = standard_labels(ids);
        validate_labels(&labels)?;
        let dim = 1usize << ids.len();
        Ok(Self {
            labels,
            matrix: CMatrix::identity(dim, dim) / cr(dim as f64),
        })
    }

    pub fn check_physical(&self) -> Result<()> {
        let h = hermiticity_defect(&self.matrix);
        if h > NORM_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian ({h:.3e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -EIGEN_TOL {
            return Err(Error::InvalidDensity(format!("eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn reorder(&self, order: &[u8]) -> Result<Self> {
        let (labels, map) = reorder_map(&self.labels, order)?;
        let dim = map.len();
        let matrix = CMatrix::from_fn(dim, dim, |i, j| self.matrix[(map[i], map[j])]);
        Ok(Self { labels, matrix })
    }

    /// `⟨ψ|ρ|ψ⟩` for a pure target on the same qubits.
    pub fn fidelity_with(&self, target: &PureState) -> Result<f64> {
        let t = target.reorder(&self.ids())?;
        let v = &self.matrix * t.amplitudes();
        Ok(t.amplitudes().dotc(&v).re)
    }

    /// Max-norm distance after aligning label order.
    pub fn distance(&self, other: &DensityOperator) -> Result<f64> {
        let o = other.reorder(&self.ids())?;
        Ok((&self.matrix - &o.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    /// `Tr(ρ·O)` for an operator on `targets`, without the Hermiticity
    /// requirement of [`Observable`].
    pub fn expectation_of(&self, op: &CMatrix, targets: &[u8]) -> Result<C64> {
        let full = embed(op, targets, &self.labels)?;
        Ok((&self.matrix * full).trace())
    }

    /// `O ρ O†` for an arbitrary operator (Kraus branch), unnormalized.
    pub(crate) fn sandwich(&self, op: &CMatrix, targets: &[u8]) -> Result<CMatrix> {
        let full = embed(op, targets, &self.labels)?;
        Ok(&full * &self.matrix * full.adjoint())
    }

    pub(crate) fn with_matrix(&self, matrix: CMatrix) -> Self {
        Self {
            labels: self.labels.clone(),
            matrix,
        }
    }

    fn project(&self, qubit: u8, basis: Basis, outcome: Outcome) -> Result<(f64, CMatrix)> {
        let p = position(&self.labels, qubit)?;
        let n = self.labels.len();
        let e = basis.eigenvector(outcome);
        let rest: Vec<usize> = (0..n).filter(|&q| q != p).collect();
        let dim = 1usize << (n - 1);
        let m = CMatrix::from_fn(dim, dim, |a, b| {
            let ba = scatter(0, a, &rest, n);
            let bb = scatter(0, b, &rest, n);
            let mut acc = cr(0.0);
            for x in 0..2 {
                for y in 0..2 {
                    acc += e[x].conj()
                        * self.matrix[(scatter(ba, x, &[p], n), scatter(bb, y, &[p], n))]
                        * e[y];
                }
            }
            acc
        });
        Ok((m.trace().re, m))
    }
}

impl QuantumState for DensityOperator {
    fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    fn apply_unitary(&self, u: &CMatrix, targets: &[u8]) -> Result<Self> {
        check_unitary(u)?;
        Ok(self.with_matrix(self.sandwich(u, targets)?))
    }

    fn expectation(&self, obs: &Observable) -> Result<f64> {
        Ok(self.expectation_of(&obs.matrix, &obs.targets)?.re)
    }

    fn branch_probability(&self, qubit: u8, basis: Basis, outcome: Outcome) -> Result<f64> {
        Ok(self.project(qubit, basis, outcome)?.0)
    }

    fn measure_branch(
        &self,
        qubit: u8,
        basis: Basis,
        outcome: Outcome,
    ) -> Result<Measurement<Self>> {
        let (probability, m) = self.project(qubit, basis, outcome)?;
        if probability < FORCE_TOL {
            return Err(Error::ZeroProbabilityBranch(probability));
        }
        let labels = self
            .labels
            .iter()
            .copied()
            .filter(|l| l.id != qubit)
            .collect();
        Ok(Measurement {
            outcome,
            probability,
            state: Self {
                labels,
                matrix: m / cr(probability),
            },
        })
    }

    fn to_density(&self) -> DensityOperator {
        self.clone()
    }
}

/// Kronecker product of two registers with disjoint labels.
pub fn tensor_product(a: &PureState, b: &PureState) -> Result<PureState> {
    let mut labels = a.labels.clone();
    labels.extend_from_slice(&b.labels);
    validate_labels(&labels)?;
    Ok(PureState {
        labels,
        amplitudes: a.amplitudes.kronecker(&b.amplitudes),
    })
}

/// Mixed-state analogue of [`tensor_product`].
pub fn tensor_density(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    let mut labels = a.labels.clone();
    labels.extend_from_slice(&b.labels);
    validate_labels(&labels)?;
    Ok(DensityOperator {
        labels,
        matrix: a.matrix.kronecker(&b.matrix),
    })
}

pub fn apply_unitary<S: QuantumState>(state: &S, u: &CMatrix, targets: &[u8]) -> Result<S> {
    state.apply_unitary(u, targets)
}

pub fn expectation<S: QuantumState>(state: &S, obs: &Observable) -> Result<f64> {
    state.expectation(obs)
}

/// Reduced operator on `keep`, in the order given by `keep`.
pub fn partial_trace(rho: &DensityOperator, keep: &[u8]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    let kp = positions(&rho.labels, keep)?;
    let n = rho.labels.len();
    let tp: Vec<usize> = (0..n).filter(|q| !kp.contains(q)).collect();
    let dk = 1usize << kp.len();
    let dt = 1usize << tp.len();
    let matrix = CMatrix::from_fn(dk, dk, |a, b| {
        let ia = scatter(0, a, &kp, n);
        let ib = scatter(0, b, &kp, n);
        (0..dt)
            .map(|t| rho.matrix[(scatter(ia, t, &tp, n), scatter(ib, t, &tp, n))])
            .sum()
    });
    let labels = kp.iter().map(|&p| rho.labels[p]).collect();
    Ok(DensityOperator { labels, matrix })
}

/// Projective measurement of one qubit. With `forced` the requested branch is
/// returned (error if its probability is below [`FORCE_TOL`]); otherwise the
/// more probable branch is returned, ties going to outcome 0.
pub fn projective_measure<S: QuantumState>(
    state: &S,
    qubit: u8,
    basis: Basis,
    forced: Option<Outcome>,
) -> Result<Measurement<S>> {
    let outcome = match forced {
        Some(o) => o,
        None => {
            let p0 = state.branch_probability(qubit, basis, Outcome::Zero)?;
            if p0 >= 0.5 - NORM_TOL {
                Outcome::Zero
            } else {
                Outcome::One
            }
        }
    };
    state.measure_branch(qubit, basis, outcome)
}

/// Both branches of a measurement, skipping those with negligible probability.
pub fn measurement_branches<S: QuantumState>(
    state: &S,
    qubit: u8,
    basis: Basis,
) -> Result<Vec<Measurement<S>>> {
    let mut out = Vec::with_capacity(2);
    for o in Outcome::BOTH {
        if state.branch_probability(qubit, basis, o)? >= FORCE_TOL {
            out.push(state.measure_branch(qubit, basis, o)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn tensor_zero_plus() {
        let s = tensor_product(&PureState::zero(1), &PureState::plus(2)).unwrap();
        let h = FRAC_1_SQRT_2;
        let want = [h, h, 0.0, 0.0];
        for (a, w) in s.amplitudes().iter().zip(want) {
            assert!(close(a.re, w, 1e-12) && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_plus_plus_is_uniform() {
        let s = tensor_product(&PureState::plus(1), &PureState::plus(2)).unwrap();
        assert!(s.amplitudes().iter().all(|a| close(a.re, 0.5, 1e-12)));
    }

    #[test]
    fn tensor_label_collision() {
        let err = tensor_product(&PureState::zero(1), &PureState::plus(1)).unwrap_err();
        assert!(matches!(err, Error::LabelCollision(1)));
    }

    #[test]
    fn cz_on_plus_plus() {
        let s = PureState::all_plus(&[1, 2])
            .unwrap()
            .apply_unitary(&gates::cz(), &[1, 2])
            .unwrap();
        // (|0+⟩ + |1−⟩)/√2
        let want = tensor_product(&PureState::zero(1), &PureState::plus(2))
            .unwrap()
            .amplitudes()
            .clone()
            + tensor_product(&PureState::one(1), &PureState::minus(2))
                .unwrap()
                .amplitudes();
        let want = PureState::from_ids(&[1, 2], want / cr(2f64.sqrt())).unwrap();
        assert!(s.equivalent(&want));
    }

    #[test]
    fn hadamard_on_zero() {
        let s = PureState::zero(1)
            .apply_unitary(&gates::hadamard(), &[1])
            .unwrap();
        assert!(s.equivalent(&PureState::plus(1)));
    }

    #[test]
    fn double_a_is_minus_i_z() {
        let a = gates::sqrt_neg_i_z();
        let aa = &a * &a;
        let want = gates::pauli_z() * c(0.0, -1.0);
        assert!((aa - want).norm() < 1e-12);
        let b = gates::sqrt_neg_i_x();
        let bb = &b * &b;
        assert!((bb - gates::pauli_x() * c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn non_unitary_rejected() {
        let m = CMatrix::from_element(2, 2, cr(1.0));
        let err = PureState::zero(1).apply_unitary(&m, &[1]).unwrap_err();
        assert!(matches!(err, Error::NotUnitary(_)));
    }

    #[test]
    fn partial_trace_of_bell_pair() {
        let h = FRAC_1_SQRT_2;
        let phi = PureState::from_ids(
            &[1, 2],
            CVector::from_vec(vec![cr(h), cr(0.0), cr(0.0), cr(h)]),
        )
        .unwrap();
        let r = partial_trace(&phi.to_density(), &[1]).unwrap();
        let want = CMatrix::identity(2, 2) / cr(2.0);
        assert!((r.matrix() - want).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_keep_all_is_identity_op() {
        let s = PureState::all_plus(&[1, 2, 3])
            .unwrap()
            .apply_unitary(&gates::cz(), &[1, 3])
            .unwrap()
            .to_density();
        let r = partial_trace(&s, &[1, 2, 3]).unwrap();
        assert!((r.matrix() - s.matrix()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_empty_keep() {
        let s = PureState::zero(1).to_density();
        assert!(matches!(partial_trace(&s, &[]), Err(Error::EmptyKeep)));
    }

    #[test]
    fn expectation_z_on_zero() {
        let z = Observable::single(Basis::Z, 1);
        assert!(close(
            PureState::zero(1).expectation(&z).unwrap(),
            1.0,
            1e-12
        ));
    }

    #[test]
    fn traceless_on_maximally_mixed() {
        let rho = DensityOperator::maximally_mixed(&[1, 2, 3, 4, 5]).unwrap();
        let xs = kron_all(&vec![gates::pauli_x(); 5]);
        let obs = Observable::new(xs, vec![1, 2, 3, 4, 5]).unwrap();
        assert!(rho.expectation(&obs).unwrap().abs() < 1e-12);
    }

    #[test]
    fn measure_plus_in_z() {
        for o in Outcome::BOTH {
            let m = projective_measure(&PureState::plus(1), 1, Basis::Z, Some(o)).unwrap();
            assert!(close(m.probability, 0.5, 1e-12));
            assert_eq!(m.state.num_qubits(), 0);
        }
    }

    #[test]
    fn forcing_impossible_branch_fails() {
        let err =
            projective_measure(&PureState::zero(1), 1, Basis::Z, Some(Outcome::One)).unwrap_err();
        assert!(matches!(err, Error::ZeroProbabilityBranch(_)));
    }

    #[test]
    fn density_and_pure_measurement_agree() {
        let s = PureState::all_plus(&[1, 2, 3])
            .unwrap()
            .apply_unitary(&gates::cz(), &[1, 2])
            .unwrap()
            .apply_unitary(&gates::cz(), &[2, 3])
            .unwrap()
            .apply_unitary(&gates::sqrt_neg_i_x(), &[2])
            .unwrap();
        for basis in Basis::ALL {
            for o in Outcome::BOTH {
                let mp = s.measure_branch(2, basis, o).unwrap();
                let md = s.to_density().measure_branch(2, basis, o).unwrap();
                assert!(close(mp.probability, md.probability, 1e-12));
                assert!(mp.state.to_density().distance(&md.state).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn reorder_round_trip() {
        let s = PureState::all_plus(&[1, 2, 3])
            .unwrap()
            .apply_unitary(&gates::sqrt_neg_i_z(), &[3])
            .unwrap()
            .apply_unitary(&gates::cz(), &[1, 3])
            .unwrap();
        let r = s.reorder(&[3, 1, 2]).unwrap();
        assert_eq!(r.ids(), vec![3, 1, 2]);
        let back = r.reorder(&[1, 2, 3]).unwrap();
        assert!((back.amplitudes() - s.amplitudes()).norm() < 1e-14);
        assert!(s.equivalent(&r));
    }

    #[test]
    fn too_many_qubits() {
        let err = PureState::all_plus(&[1, 2, 3, 4, 5, 6, 7]).unwrap_err();
        assert!(matches!(err, Error::TooManyQubits(7)));
    }

    #[test]
    fn y_basis_rotation_lands_on_computational() {
        for basis in Basis::ALL {
            for o in Outcome::BOTH {
                let [a, b] = basis.eigenvector(o);
                let v = basis.to_computational() * CVector::from_vec(vec![a, b]);
                assert!((v[o.bit() as usize].norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
