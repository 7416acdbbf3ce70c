//! Logical-state tomography, single-qubit process tomography in the χ
//! representation, fidelities, and Bloch-sphere images of channels.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::code412::{logical_ops, AncillaState, ProbeState, CODE_QUBITS};
use crate::error::{Error, Result};
use crate::kernel::{
    c, cr, gates, hermitian_eigenvalues, hermiticity_defect, partial_trace, Basis, CMatrix,
    PureState, QuantumState, EIGEN_TOL,
};
use crate::sampling::{CountRecord, Setting};

/// Most negative eigenvalue tolerated on sampled input before a logical
/// density matrix is considered broken rather than merely noisy.
pub const SAMPLED_EIGEN_FLOOR: f64 = -0.05;

pub const PAULI_LABELS: [&str; 4] = ["I", "X", "Y", "Z"];

/// `[I, X, Y, Z]` as 2×2 matrices.
pub fn pauli_basis() -> [CMatrix; 4] {
    [
        gates::identity(1),
        gates::pauli_x(),
        gates::pauli_y(),
        gates::pauli_z(),
    ]
}

fn bloch_to_density(r: [f64; 3]) -> CMatrix {
    let [_, x, y, z] = pauli_basis();
    (gates::identity(1) + x * cr(r[0]) + y * cr(r[1]) + z * cr(r[2])) * cr(0.5)
}

fn density_to_bloch(m: &CMatrix) -> [f64; 3] {
    let [_, x, y, z] = pauli_basis();
    [&x, &y, &z].map(|p| (p * m).trace().re)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalDensityMatrix {
    #[serde(with = "crate::serde_matrix")]
    pub matrix: CMatrix,
    /// `(⟨X̄⟩, ⟨Ȳ⟩, ⟨Z̄⟩)`.
    pub expectations: [f64; 3],
    pub min_eigenvalue: f64,
    /// Set when the smallest eigenvalue is below `−EIGEN_TOL`.
    pub unphysical: bool,
}

impl LogicalDensityMatrix {
    pub fn from_expectations(expectations: [f64; 3]) -> Self {
        let matrix = bloch_to_density(expectations);
        let min_eigenvalue = hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Self {
            matrix,
            expectations,
            min_eigenvalue,
            unphysical: min_eigenvalue < -EIGEN_TOL,
        }
    }

    /// False once the negativity exceeds what sampling noise explains.
    pub fn within_sampling_tolerance(&self) -> bool {
        self.min_eigenvalue >= SAMPLED_EIGEN_FLOOR
    }

    pub fn fidelity_with(&self, target: &PureState) -> Result<f64> {
        if target.num_qubits() != 1 {
            return Err(Error::ShapeMismatch(
                "logical target must be one qubit".into(),
            ));
        }
        let v = target.amplitudes();
        Ok((v.adjoint() * &self.matrix * v)[(0, 0)].re)
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.matrix, &["0", "1"])
    }
}

/// `ρ_L = ½(I + ⟨X̄⟩X + ⟨Ȳ⟩Y + ⟨Z̄⟩Z)` from a state on (1,2,4,5).
pub fn logical_tomography<S: QuantumState>(rho: &S) -> Result<LogicalDensityMatrix> {
    let ops = logical_ops();
    let mut e = [0.0; 3];
    for (slot, p) in e.iter_mut().zip([&ops.xbar, &ops.ybar, &ops.zbar]) {
        *slot = rho.expectation(&p.to_observable()?)?;
    }
    Ok(LogicalDensityMatrix::from_expectations(e))
}

/// Settings for `X̄`, `Ȳ` and `Z̄` on (1,2,4,5); sites outside an operator's
/// support are read in Z.
pub fn logical_settings() -> [Setting; 3] {
    let ops = logical_ops();
    [&ops.xbar, &ops.ybar, &ops.zbar].map(|p| {
        Setting(
            CODE_QUBITS
                .iter()
                .map(|&q| {
                    let l = p.letter(q);
                    (q, l.basis().unwrap_or(Basis::Z))
                })
                .collect(),
        )
    })
}

/// Logical density matrix from count tables covering the logical settings.
pub fn logical_from_counts(records: &[CountRecord]) -> Result<LogicalDensityMatrix> {
    let ops = logical_ops();
    let mut e = [0.0; 3];
    for ((slot, p), setting) in e
        .iter_mut()
        .zip([&ops.xbar, &ops.ybar, &ops.zbar])
        .zip(logical_settings())
    {
        let rec = records
            .iter()
            .find(|r| p.letters().all(|(q, l)| r.setting.basis_of(q) == l.basis()))
            .ok_or_else(|| {
                Error::InvalidParameter(format!("no count table for setting {setting}"))
            })?;
        let sign = p.phase().sign().expect("Hermitian logical operator");
        *slot = sign * rec.parity_expectation(&p.support())?;
    }
    Ok(LogicalDensityMatrix::from_expectations(e))
}

/// `⟨ψ|ρ|ψ⟩`, with registers matched by label. A target on a subset of the
/// register is compared with the reduced state.
pub fn state_fidelity<S: QuantumState>(rho: &S, target: &PureState) -> Result<f64> {
    let ids = target.ids();
    if ids.len() < rho.num_qubits() {
        return partial_trace(&rho.to_density(), &ids)?.fidelity_with(target);
    }
    rho.to_density().fidelity_with(target)
}

/// Process matrix in the `{I, X, Y, Z}` basis:
/// `ε(ρ) = Σ_mn χ_mn P_m ρ P_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiMatrix {
    #[serde(with = "crate::serde_matrix")]
    matrix: CMatrix,
}

impl ChiMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (4, 4) {
            return Err(Error::ShapeMismatch(format!(
                "χ must be 4×4, got {:?}",
                matrix.shape()
            )));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > 1e-8 {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// χ of the unitary channel `ρ ↦ UρU†`.
    pub fn for_unitary(u: &CMatrix) -> Self {
        let a: Vec<_> = pauli_basis()
            .iter()
            .map(|p| (p * u).trace() * 0.5)
            .collect();
        let matrix = CMatrix::from_fn(4, 4, |m, n| a[m] * a[n].conj());
        Self { matrix }
    }

    pub fn identity() -> Self {
        Self::for_unitary(&gates::identity(1))
    }

    pub fn hadamard() -> Self {
        Self::for_unitary(&gates::hadamard())
    }

    /// Pauli channel with probabilities `(p_I, p_X, p_Y, p_Z)`.
    pub fn pauli_channel(p: [f64; 4]) -> Self {
        Self {
            matrix: CMatrix::from_fn(4, 4, |m, n| if m == n { cr(p[m]) } else { cr(0.0) }),
        }
    }

    /// From the Choi matrix `J = Σ_ij |i⟩⟨j| ⊗ ε(|i⟩⟨j|)`:
    /// `χ_mn = ⟨⟨P_m|J|P_n⟩⟩ / 4` with `|P⟩⟩ = (I ⊗ P)(|00⟩ + |11⟩)`.
    pub fn from_choi(j: &CMatrix) -> Result<Self> {
        if j.shape() != (4, 4) {
            return Err(Error::ShapeMismatch("Choi matrix must be 4×4".into()));
        }
        let vecs: Vec<_> = pauli_basis()
            .iter()
            .map(|p| crate::kernel::CVector::from_fn(4, |idx, _| p[(idx % 2, idx / 2)]))
            .collect();
        let matrix = CMatrix::from_fn(4, 4, |m, n| {
            (vecs[m].adjoint() * j * &vecs[n])[(0, 0)] * 0.25
        });
        Self::new(matrix)
    }

    /// Choi matrix from the images of the four matrix units.
    pub fn from_unit_images(e: [[CMatrix; 2]; 2]) -> Result<Self> {
        let mut j = CMatrix::zeros(4, 4);
        for (i, row) in e.iter().enumerate() {
            for (k, img) in row.iter().enumerate() {
                if img.shape() != (2, 2) {
                    return Err(Error::ShapeMismatch("channel outputs must be 2×2".into()));
                }
                j.view_mut((2 * i, 2 * k), (2, 2)).copy_from(img);
            }
        }
        Self::from_choi(&j)
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let p = pauli_basis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                let w = self.matrix[(m, n)];
                if w.norm() > 0.0 {
                    out += &p[m] * rho * p[n].adjoint() * w;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Deviation of `Σ χ_mn P_n P_m` from the identity.
    pub fn trace_preservation_defect(&self) -> f64 {
        let p = pauli_basis();
        let mut acc = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                acc += p[n].adjoint() * &p[m] * self.matrix[(m, n)];
            }
        }
        (acc - gates::identity(1)).norm()
    }

    pub fn is_physical(&self) -> bool {
        self.eigenvalues().iter().all(|&l| l >= -EIGEN_TOL)
            && self.trace_preservation_defect() < 1e-8
    }

    pub fn entry(&self, m: usize, n: usize) -> crate::kernel::C64 {
        self.matrix[(m, n)]
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.matrix, &PAULI_LABELS)
    }
}

fn matrix_csv(m: &CMatrix, labels: &[&str]) -> String {
    let mut s = String::from("row,col,re,im\n");
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let _ = writeln!(s, "{},{},{:.12},{:.12}", labels[i], labels[j], z.re, z.im);
        }
    }
    s
}

/// Outputs of a single-qubit channel for the four probe inputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    #[serde(with = "probe_map")]
    pub outputs: BTreeMap<ProbeState, CMatrix>,
}

mod probe_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "crate::serde_matrix")] CMatrix);

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<ProbeState, CMatrix>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let w: BTreeMap<&str, Wrapped> = m
            .iter()
            .map(|(k, v)| (k.name(), Wrapped(v.clone())))
            .collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<ProbeState, CMatrix>, D::Error> {
        use serde::de::Error as _;
        let w: BTreeMap<String, Wrapped> = BTreeMap::deserialize(d)?;
        w.into_iter()
            .map(|(k, v)| Ok((k.parse().map_err(D::Error::custom)?, v.0)))
            .collect()
    }
}

impl ChannelSample {
    pub fn from_fn(mut f: impl FnMut(ProbeState) -> Result<CMatrix>) -> Result<Self> {
        let mut outputs = BTreeMap::new();
        for p in ProbeState::ALL {
            outputs.insert(p, f(p)?);
        }
        Ok(Self { outputs })
    }

    fn get(&self, p: ProbeState) -> Result<&CMatrix> {
        self.outputs
            .get(&p)
            .ok_or_else(|| Error::MissingProbe(p.name().to_string()))
    }
}

/// Linear inversion from the probe outputs, using
/// `ε(|0⟩⟨1|) = ε(+) + iε(+y) − (1+i)/2·(ε(0) + ε(1))`.
pub fn reconstruct_chi(sample: &ChannelSample) -> Result<ChiMatrix> {
    let e0 = sample.get(ProbeState::Zero)?;
    let e1 = sample.get(ProbeState::One)?;
    let ep = sample.get(ProbeState::Plus)?;
    let ey = sample.get(ProbeState::PlusY)?;
    let e01 = ep + ey * c(0.0, 1.0) - (e0 + e1) * c(0.5, 0.5);
    let e10 = e01.adjoint();
    ChiMatrix::from_unit_images([[e0.clone(), e01], [e10, e1.clone()]])
}

/// `Re Tr(χ_a χ_b) / (Tr χ_a · Tr χ_b)`.
pub fn process_fidelity(chi_exp: &ChiMatrix, chi_ideal: &ChiMatrix) -> Result<f64> {
    let norm = chi_exp.trace() * chi_ideal.trace();
    if norm.abs() < 1e-12 {
        return Err(Error::ZeroTrace);
    }
    Ok((chi_exp.matrix() * chi_ideal.matrix()).trace().re / norm)
}

/// Arithmetic mean over the probe set.
pub fn average_probe_fidelity(fidelities: &[f64]) -> Result<f64> {
    if fidelities.is_empty() {
        return Err(Error::InvalidParameter("no probe fidelities".into()));
    }
    Ok(fidelities.iter().sum::<f64>() / fidelities.len() as f64)
}

/// Average over the Bloch sphere for a single qubit, `(2F_p + 1)/3`.
pub fn bloch_average_fidelity(process_fidelity: f64) -> f64 {
    (2.0 * process_fidelity + 1.0) / 3.0
}

/// Fidelity of each channel output with `target_unitary` applied to the probe.
pub fn probe_fidelities(
    sample: &ChannelSample,
    target_unitary: &CMatrix,
) -> Result<BTreeMap<ProbeState, f64>> {
    ProbeState::ALL
        .iter()
        .map(|&p| {
            let a = p.ancilla();
            let v = target_unitary * a.to_state(1).amplitudes();
            let out = sample.get(p)?;
            Ok((p, (v.adjoint() * out * &v)[(0, 0)].re))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub input: [f64; 3],
    pub output: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochImage {
    pub points: Vec<BlochPoint>,
    /// Some output lies outside the unit ball.
    pub unphysical: bool,
}

impl BlochImage {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("in_x,in_y,in_z,out_x,out_y,out_z\n");
        for p in &self.points {
            let [a, b, c] = p.input;
            let [x, y, z] = p.output;
            let _ = writeln!(s, "{a:.9},{b:.9},{c:.9},{x:.9},{y:.9},{z:.9}");
        }
        s
    }
}

/// The six axis points followed by `n` Fibonacci-lattice points.
pub fn bloch_grid(n: usize) -> Vec<[f64; 3]> {
    let mut pts = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for k in 0..n {
        let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * k as f64;
        pts.push([r * phi.cos(), r * phi.sin(), z]);
    }
    pts
}

pub fn bloch_image(chi: &ChiMatrix, points: &[[f64; 3]]) -> Result<BlochImage> {
    let mut unphysical = false;
    let mut out = Vec::with_capacity(points.len());
    for &r in points {
        let n2: f64 = r.iter().map(|x| x * x).sum();
        if n2 > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "Bloch vector {r:?} outside the unit ball"
            )));
        }
        let img = density_to_bloch(&chi.apply(&bloch_to_density(r)));
        if img.iter().map(|x| x * x).sum::<f64>().sqrt() > 1.0 + 1e-9 {
            unphysical = true;
        }
        out.push(BlochPoint {
            input: r,
            output: img,
        });
    }
    Ok(BlochImage {
        points: out,
        unphysical,
    })
}

/// Bloch vector of an ancilla state after the channel.
pub fn channel_bloch(chi: &ChiMatrix, a: &AncillaState) -> [f64; 3] {
    density_to_bloch(&chi.apply(&bloch_to_density(a.bloch())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code412::{encode, logical_state, LogicalBasis};
    use crate::kernel::{DensityOperator, Outcome};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_of(chi: &ChiMatrix) -> ChannelSample {
        ChannelSample::from_fn(|p| {
            let v = p.ancilla().to_state(1);
            let rho = v.amplitudes() * v.amplitudes().adjoint();
            Ok(chi.apply(&rho))
        })
        .unwrap()
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn logical_tomography_examples() {
        let plus = logical_tomography(&logical_state(LogicalBasis::Plus)).unwrap();
        assert!(close(
            &plus.matrix,
            &bloch_to_density([1.0, 0.0, 0.0]),
            1e-10
        ));
        let zero = logical_tomography(&logical_state(LogicalBasis::Zero)).unwrap();
        assert!(close(
            &zero.matrix,
            &bloch_to_density([0.0, 0.0, 1.0]),
            1e-10
        ));
        let mixed = DensityOperator::maximally_mixed(&[1, 2, 4, 5]).unwrap();
        let m = logical_tomography(&mixed).unwrap();
        assert!(close(&m.matrix, &(gates::identity(1) * cr(0.5)), 1e-12));
        assert!(!m.unphysical);
    }

    #[test]
    fn logical_from_large_counts() {
        let s = logical_state(LogicalBasis::MinusY);
        let recs: Vec<_> = logical_settings()
            .iter()
            .enumerate()
            .map(|(i, set)| {
                crate::sampling::sample_setting_counts(
                    &s,
                    set,
                    1e4,
                    crate::sampling::RngSeed::new(3).with_stream(i as u64),
                )
                .unwrap()
            })
            .collect();
        let l = logical_from_counts(&recs).unwrap();
        assert!((l.expectations[1] + 1.0).abs() < 1e-12);
        assert!(l.expectations[0].abs() < 0.05 && l.expectations[2].abs() < 0.05);
        assert!(logical_from_counts(&recs[..2]).is_err());
    }

    #[test]
    fn sampled_negativity_is_flagged() {
        let l = LogicalDensityMatrix::from_expectations([0.6, 0.6, 0.6]);
        assert!(l.unphysical);
        assert!(l.within_sampling_tolerance());
        let bad = LogicalDensityMatrix::from_expectations([1.0, 1.0, 1.0]);
        assert!(!bad.within_sampling_tolerance());
    }

    #[test]
    fn encoded_probe_is_hadamard_image() {
        for probe in ProbeState::ALL {
            let e = encode(&probe.ancilla(), Some(Outcome::One)).unwrap();
            let l = logical_tomography(&e.corrected().unwrap()).unwrap();
            let [x, y, z] = probe.ancilla().bloch();
            let want = [z, -y, x];
            for (a, b) in l.expectations.iter().zip(want) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn state_fidelity_white_noise() {
        let ideal = logical_state(LogicalBasis::Plus);
        let v = 0.7;
        let m = ideal.to_density().matrix() * cr(v) + gates::identity(4) * cr((1.0 - v) / 16.0);
        let rho = DensityOperator::from_ids(&[1, 2, 4, 5], m).unwrap();
        let f = state_fidelity(&rho, &ideal).unwrap();
        assert!((f - (v + (1.0 - v) / 16.0)).abs() < 1e-12);
        let mixed = DensityOperator::maximally_mixed(&[1]).unwrap();
        assert!((state_fidelity(&mixed, &PureState::plus_y(1)).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chi_identity_and_hadamard() {
        let id = reconstruct_chi(&sample_of(&ChiMatrix::identity())).unwrap();
        assert!((id.entry(0, 0).re - 1.0).abs() < 1e-12);
        assert!((id.matrix().norm() - 1.0).abs() < 1e-12);
        let h = reconstruct_chi(&sample_of(&ChiMatrix::hadamard())).unwrap();
        for (m, n) in [(1, 1), (3, 3), (1, 3), (3, 1)] {
            assert!((h.entry(m, n) - cr(0.5)).norm() < 1e-12);
        }
        assert!(process_fidelity(&h, &ChiMatrix::hadamard()).unwrap() > 1.0 - 1e-12);
        assert!(process_fidelity(&h, &ChiMatrix::identity()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn chi_depolarizing() {
        let p = 0.3;
        let chi = ChiMatrix::pauli_channel([1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0]);
        let rec = reconstruct_chi(&sample_of(&chi)).unwrap();
        assert!(close(rec.matrix(), chi.matrix(), 1e-12));
        let f = process_fidelity(&rec, &ChiMatrix::identity()).unwrap();
        assert!((f - (1.0 - 0.75 * p)).abs() < 1e-12);
        assert!(rec.is_physical());
    }

    #[test]
    fn missing_probe_and_zero_trace() {
        let mut s = sample_of(&ChiMatrix::identity());
        s.outputs.remove(&ProbeState::PlusY);
        assert!(matches!(reconstruct_chi(&s), Err(Error::MissingProbe(_))));
        let zero = ChiMatrix::new(CMatrix::zeros(4, 4)).unwrap();
        assert!(matches!(
            process_fidelity(&zero, &ChiMatrix::identity()),
            Err(Error::ZeroTrace)
        ));
    }

    fn random_channel(rng: &mut ChaCha8Rng) -> [CMatrix; 2] {
        // Kraus pair from a random isometry C² → C⁴ (Gram-Schmidt on two columns).
        let mut g = || c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let mut m = CMatrix::from_fn(4, 2, |_, _| g());
        let q = m.clone().qr().q();
        m.copy_from(&q.columns(0, 2));
        let k0 = m.rows(0, 2).into_owned();
        let k1 = m.rows(2, 2).into_owned();
        [k0, k1]
    }

    #[test]
    fn reconstruction_is_exact_on_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let ks = random_channel(&mut rng);
            let apply = |rho: &CMatrix| {
                ks.iter()
                    .fold(CMatrix::zeros(2, 2), |acc, k| acc + k * rho * k.adjoint())
            };
            let sample = ChannelSample::from_fn(|p| {
                let v = p.ancilla().to_state(1);
                Ok(apply(&(v.amplitudes() * v.amplitudes().adjoint())))
            })
            .unwrap();
            let chi = reconstruct_chi(&sample).unwrap();
            assert!(chi.is_physical());
            for _ in 0..20 {
                let a = AncillaState::random(&mut rng);
                let v = a.to_state(1);
                let rho = v.amplitudes() * v.amplitudes().adjoint();
                assert!(close(&chi.apply(&rho), &apply(&rho), 1e-8));
            }
        }
    }

    #[test]
    fn process_fidelity_is_symmetric() {
        let a = ChiMatrix::pauli_channel([0.7, 0.1, 0.1, 0.1]);
        let b = ChiMatrix::hadamard();
        let f1 = process_fidelity(&a, &b).unwrap();
        let f2 = process_fidelity(&b, &a).unwrap();
        assert!((f1 - f2).abs() < 1e-14);
    }

    #[test]
    fn probe_averages() {
        let f = average_probe_fidelity(&[0.80, 0.77, 0.75, 0.92]).unwrap();
        assert!((f - 0.81).abs() < 1e-12);
        let f = average_probe_fidelity(&[0.80, 0.77, 0.78, 0.88]).unwrap();
        assert!((f - 0.8075).abs() < 1e-12);
        assert_eq!(average_probe_fidelity(&[1.0; 4]).unwrap(), 1.0);
        assert!((bloch_average_fidelity(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bloch_images() {
        let pts = bloch_grid(20);
        let id = bloch_image(&ChiMatrix::identity(), &pts).unwrap();
        for p in &id.points {
            for k in 0..3 {
                assert!((p.input[k] - p.output[k]).abs() < 1e-12);
            }
        }
        let h = bloch_image(&ChiMatrix::hadamard(), &pts).unwrap();
        for p in &h.points {
            let [x, y, z] = p.input;
            let want = [z, -y, x];
            for (got, want) in p.output.iter().zip(want) {
                assert!((got - want).abs() < 1e-12);
            }
        }
        let v = 0.6;
        let white = ChiMatrix::pauli_channel([
            1.0 - 0.75 * (1.0 - v),
            0.25 * (1.0 - v),
            0.25 * (1.0 - v),
            0.25 * (1.0 - v),
        ]);
        let w = bloch_image(&white, &pts).unwrap();
        assert!(!w.unphysical);
        for p in &w.points {
            for k in 0..3 {
                assert!((p.output[k] - v * p.input[k]).abs() < 1e-12);
            }
        }
        let expand = ChiMatrix::pauli_channel([1.5, -0.5, 0.0, 0.0]);
        assert!(bloch_image(&expand, &pts).unwrap().unphysical);
        assert!(bloch_image(&white, &[[2.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn chi_json_roundtrip() {
        let h = ChiMatrix::hadamard();
        let s = serde_json::to_string(&h).unwrap();
        let back: ChiMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(h, back);
        let sample = sample_of(&h);
        let s = serde_json::to_string(&sample).unwrap();
        let back: ChannelSample = serde_json::from_str(&s).unwrap();
        assert_eq!(sample, back);
        assert!(h.to_csv().starts_with("row,col,re,im\nI,I,"));
    }
}
