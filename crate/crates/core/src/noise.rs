//! Noise channels standing in for experimental imperfection: per-qubit
//! depolarizing and dephasing Kraus maps followed by global white noise.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{cr, gates, CMatrix, DensityOperator, QuantumState};

/// Where in the pipeline the noise acts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApplicationPoint {
    /// On the five-qubit resource, before the ancilla is measured.
    #[default]
    PostResource,
    /// On the four-qubit code state after encoding.
    PostEncoding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Depolarizing probability per qubit: `ρ ↦ (1−p)ρ + p·Tr_q(ρ) ⊗ I/2`.
    #[serde(default)]
    pub depolarizing: BTreeMap<u8, f64>,
    /// Dephasing probability per qubit: `ρ ↦ (1−q)ρ + q·ZρZ`.
    #[serde(default)]
    pub dephasing: BTreeMap<u8, f64>,
    /// Global white-noise visibility.
    #[serde(default = "one")]
    pub visibility: f64,
    #[serde(default)]
    pub application: ApplicationPoint,
}

fn one() -> f64 {
    1.0
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self {
            depolarizing: BTreeMap::new(),
            dephasing: BTreeMap::new(),
            visibility: 1.0,
            application: ApplicationPoint::PostResource,
        }
    }

    pub fn white(visibility: f64, application: ApplicationPoint) -> Self {
        Self {
            visibility,
            application,
            ..Self::ideal()
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.visibility == 1.0
            && self.depolarizing.values().all(|&p| p == 0.0)
            && self.dephasing.values().all(|&q| q == 0.0)
    }

    /// Every out-of-range parameter, as human-readable messages.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let bad = |x: f64| !(0.0..=1.0).contains(&x) || x.is_nan();
        if bad(self.visibility) {
            out.push(format!(
                "noise.visibility = {} is outside [0, 1]",
                self.visibility
            ));
        }
        for (name, map) in [
            ("depolarizing", &self.depolarizing),
            ("dephasing", &self.dephasing),
        ] {
            for (q, &p) in map {
                if bad(p) {
                    out.push(format!("noise.{name}[{q}] = {p} is outside [0, 1]"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(p.join("; ")))
        }
    }
}

fn pauli_mix(rho: &DensityOperator, q: u8, weights: [f64; 4]) -> Result<CMatrix> {
    let paulis = [
        gates::identity(1),
        gates::pauli_x(),
        gates::pauli_y(),
        gates::pauli_z(),
    ];
    let mut acc = CMatrix::zeros(rho.matrix().nrows(), rho.matrix().ncols());
    for (p, w) in paulis.iter().zip(weights) {
        if w != 0.0 {
            acc += rho.sandwich(p, &[q])? * cr(w);
        }
    }
    Ok(acc)
}

/// `ρ ↦ v·ρ′ + (1−v)·I/2ⁿ`, where `ρ′` has the per-qubit channels applied.
pub fn apply_noise(rho: &DensityOperator, model: &NoiseModel) -> Result<DensityOperator> {
    model.validate()?;
    let mut out = rho.clone();
    for (&q, &p) in &model.depolarizing {
        if !rho.has_qubit(q) {
            return Err(Error::UnknownQubit(q));
        }
        if p > 0.0 {
            let m = pauli_mix(&out, q, [1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0])?;
            out = out.with_matrix(m);
        }
    }
    for (&q, &p) in &model.dephasing {
        if !rho.has_qubit(q) {
            return Err(Error::UnknownQubit(q));
        }
        if p > 0.0 {
            let m = pauli_mix(&out, q, [1.0 - p, 0.0, 0.0, p])?;
            out = out.with_matrix(m);
        }
    }
    Ok(white_noise(&out, model.visibility))
}

/// `v·ρ + (1−v)·I/2ⁿ`.
pub fn white_noise(rho: &DensityOperator, v: f64) -> DensityOperator {
    if v == 1.0 {
        return rho.clone();
    }
    let d = rho.matrix().nrows();
    let m = rho.matrix() * cr(v) + gates::identity(rho.num_qubits()) * cr((1.0 - v) / d as f64);
    rho.with_matrix(m)
}
