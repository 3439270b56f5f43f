//! Static register description and noise settings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::state::{Bits, MAX_MIXED_QUBITS};
use crate::units::AngularFrequency;

/// Default hardware bound on |J|, 2π × 37.5 Hz (nearest-neighbour coupling).
pub const DEFAULT_J_MAX_HZ: f64 = 37.5;
/// Rabi frequency used as the initial dressing amplitude, 2π × 28 kHz.
pub const DEFAULT_OMEGA_I_HZ: f64 = 28_000.0;
/// Ramp-down duration of one gate.
pub const DEFAULT_T_F_S: f64 = 15e-3;
/// Post-decoupling coherence time.
pub const DEFAULT_T2_S: f64 = 20e-3;

/// Couplings of one perceptron register: a target qubit, control qubits
/// coupled through `J_ij`, and an optional bias qubit coupled through Θ.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinChainConfig<T> {
    pub n_qubits: usize,
    pub target: usize,
    pub bias: Option<usize>,
    /// Bare coupling J between the target and each control.
    pub couplings: BTreeMap<usize, AngularFrequency<T>>,
    /// Θ, the target–bias coupling.
    pub bias_strength: AngularFrequency<T>,
    /// Effective-coupling factors α_j ∈ [−1, 1]; missing entries mean 1.
    pub coupling_scales: BTreeMap<usize, T>,
    /// Per-qubit detuning ν_k; empty means all zero (rotating frame).
    pub detunings: Vec<AngularFrequency<T>>,
    pub j_max: AngularFrequency<T>,
}

impl<T: Real> SpinChainConfig<T> {
    /// Control–target–bias chain (qubits 0, 1, 2) with J = Θ = j_max.
    pub fn three_ion() -> Self {
        let j = AngularFrequency::from_hz(T::lit(DEFAULT_J_MAX_HZ));
        Self {
            n_qubits: 3,
            target: 1,
            bias: Some(2),
            couplings: BTreeMap::from([(0, j)]),
            bias_strength: j,
            coupling_scales: BTreeMap::new(),
            detunings: Vec::new(),
            j_max: j,
        }
    }

    /// Target plus `n_controls` controls and no bias qubit. Controls are
    /// qubits `0..n_controls`, the target is qubit `n_controls`.
    pub fn with_controls(couplings: &[AngularFrequency<T>], j_max: AngularFrequency<T>) -> Self {
        let n = couplings.len();
        Self {
            n_qubits: n + 1,
            target: n,
            bias: None,
            couplings: couplings.iter().copied().enumerate().collect(),
            bias_strength: AngularFrequency::zero(),
            coupling_scales: BTreeMap::new(),
            detunings: Vec::new(),
            j_max,
        }
    }

    pub fn scale(&self, j: usize) -> T {
        self.coupling_scales.get(&j).copied().unwrap_or_else(T::one)
    }

    pub fn set_scale(&mut self, j: usize, alpha: T) {
        self.coupling_scales.insert(j, alpha);
    }

    /// α_j · J_ij
    pub fn effective_coupling(&self, j: usize) -> AngularFrequency<T> {
        self.couplings
            .get(&j)
            .map(|&c| c * self.scale(j))
            .unwrap_or_else(AngularFrequency::zero)
    }

    pub fn detuning(&self, k: usize) -> AngularFrequency<T> {
        self.detunings
            .get(k)
            .copied()
            .unwrap_or_else(AngularFrequency::zero)
    }

    pub fn has_detunings(&self) -> bool {
        self.detunings.iter().any(|d| d.0 != T::zero())
    }

    /// Input field x = Σ_j α_j J_ij z_j + Θ z_b seen by the target when the
    /// register sits in the basis configuration `bits` (target bit ignored).
    pub fn field(&self, bits: &Bits) -> AngularFrequency<T> {
        let mut x = AngularFrequency::zero();
        for &j in self.couplings.keys() {
            x = x + self.effective_coupling(j) * bits.z::<T>(j);
        }
        if let Some(b) = self.bias {
            x = x + self.bias_strength * bits.z::<T>(b);
        }
        x
    }

    /// Largest possible |x|: Σ_j |α_j J_ij| + |Θ|.
    pub fn field_bound(&self) -> AngularFrequency<T> {
        let mut x = if self.bias.is_some() {
            self.bias_strength.abs()
        } else {
            AngularFrequency::zero()
        };
        for &j in self.couplings.keys() {
            x = x + self.effective_coupling(j).abs();
        }
        x
    }

    pub fn controls(&self) -> impl Iterator<Item = usize> + '_ {
        self.couplings.keys().copied()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_qubits < 2 {
            return bad(format!("register needs at least 2 qubits, got {}", self.n_qubits));
        }
        if self.target >= self.n_qubits {
            return bad(format!("target index {} out of range", self.target));
        }
        if let Some(b) = self.bias {
            if b == self.target {
                return bad("bias qubit coincides with the target".into());
            }
            if b >= self.n_qubits {
                return bad(format!("bias index {b} out of range"));
            }
            if self.couplings.contains_key(&b) {
                return bad(format!("qubit {b} is both bias and control"));
            }
        }
        if !(self.j_max.is_finite() && self.j_max.0 > T::zero()) {
            return bad("j_max must be positive and finite".into());
        }
        // rounding slack for couplings set exactly at the bound
        let bound = self.j_max.0 * (T::one() + T::lit(1e-12));
        for (&j, &coupling) in &self.couplings {
            if j == self.target {
                return bad("a control coincides with the target".into());
            }
            if j >= self.n_qubits {
                return bad(format!("control index {j} out of range"));
            }
            if !coupling.is_finite() {
                return bad(format!("coupling to qubit {j} is not finite"));
            }
            let alpha = self.scale(j);
            if !(alpha.is_finite() && alpha.abs() <= T::one()) {
                return bad(format!("coupling scale {alpha} for qubit {j} outside [-1, 1]"));
            }
            if self.effective_coupling(j).0.abs() > bound {
                return bad(format!(
                    "effective coupling {} to qubit {j} exceeds j_max {}",
                    self.effective_coupling(j),
                    self.j_max
                ));
            }
        }
        for &j in self.coupling_scales.keys() {
            if !self.couplings.contains_key(&j) {
                return bad(format!("coupling scale given for non-control qubit {j}"));
            }
        }
        if !self.bias_strength.is_finite() {
            return bad("bias strength is not finite".into());
        }
        if self.bias.is_some() && self.bias_strength.0.abs() > bound {
            return bad(format!(
                "bias strength {} exceeds j_max {}",
                self.bias_strength, self.j_max
            ));
        }
        if !self.detunings.is_empty() && self.detunings.len() != self.n_qubits {
            return bad(format!(
                "expected {} detunings, got {}",
                self.n_qubits,
                self.detunings.len()
            ));
        }
        if self.detunings.iter().any(|d| !d.is_finite()) {
            return bad("detuning is not finite".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Dephasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    DensityMatrix,
    Trajectories,
}

/// Markovian pure dephasing with per-qubit coherence times.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel<T> {
    pub kind: NoiseKind,
    /// Coherence time applied to qubits without an override.
    pub t2: T,
    pub t2_overrides: BTreeMap<usize, T>,
    pub representation: Representation,
    pub n_trajectories: usize,
    /// Root seed for trajectory sampling.
    pub seed: u64,
}

impl<T: Real> NoiseModel<T> {
    pub fn noiseless() -> Self {
        Self {
            kind: NoiseKind::None,
            t2: T::lit(DEFAULT_T2_S),
            t2_overrides: BTreeMap::new(),
            representation: Representation::DensityMatrix,
            n_trajectories: 1,
            seed: 0,
        }
    }

    pub fn dephasing(t2: T) -> Self {
        Self {
            kind: NoiseKind::Dephasing,
            t2,
            ..Self::noiseless()
        }
    }

    pub fn with_trajectories(mut self, n_trajectories: usize, seed: u64) -> Self {
        self.representation = Representation::Trajectories;
        self.n_trajectories = n_trajectories;
        self.seed = seed;
        self
    }

    pub fn is_noisy(&self) -> bool {
        self.kind == NoiseKind::Dephasing
    }

    pub fn t2_of(&self, qubit: usize) -> T {
        self.t2_overrides.get(&qubit).copied().unwrap_or(self.t2)
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.kind == NoiseKind::None {
            return Ok(());
        }
        let positive = |t: T| t.is_finite() && t > T::zero();
        if !positive(self.t2) || !self.t2_overrides.values().all(|&t| positive(t)) {
            return Err(Error::InvalidNoise("t2 must be positive and finite".into()));
        }
        if self.t2_overrides.keys().any(|&q| q >= n_qubits) {
            return Err(Error::InvalidNoise("t2 override for a qubit outside the register".into()));
        }
        match self.representation {
            Representation::Trajectories if self.n_trajectories == 0 => {
                Err(Error::InvalidNoise("n_trajectories must be at least 1".into()))
            }
            Representation::DensityMatrix if n_qubits > MAX_MIXED_QUBITS => Err(Error::TooLarge {
                n_qubits,
                limit: MAX_MIXED_QUBITS,
            }),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_ion_is_valid() {
        SpinChainConfig::<f64>::three_ion().validate().unwrap();
    }

    #[test]
    fn field_follows_basis_bits() {
        let cfg = SpinChainConfig::<f64>::three_ion();
        let j = cfg.j_max.0;
        // control |1>, bias |0>: x = J - Θ = 0
        assert!(cfg.field(&"110".parse().unwrap()).0.abs() < 1e-12);
        // control |1>, bias |1>: x = 2J
        assert!((cfg.field(&"101".parse().unwrap()).0 - 2.0 * j).abs() < 1e-12);
        // control |0>, bias |0>: x = -2J
        assert!((cfg.field(&"000".parse().unwrap()).0 + 2.0 * j).abs() < 1e-12);
    }

    #[test]
    fn scales_enter_field() {
        let mut cfg = SpinChainConfig::<f64>::three_ion();
        cfg.bias_strength = AngularFrequency::zero();
        cfg.set_scale(0, -0.25);
        let x = cfg.field(&"100".parse().unwrap());
        assert!((x.0 + 0.25 * cfg.j_max.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_excess_coupling() {
        let mut cfg = SpinChainConfig::<f64>::three_ion();
        cfg.couplings.insert(0, cfg.j_max * 1.5);
        assert!(cfg.validate().is_err());
        cfg.set_scale(0, 0.5);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_collisions() {
        let mut cfg = SpinChainConfig::<f64>::three_ion();
        cfg.bias = Some(1);
        assert!(cfg.validate().is_err());
        let mut cfg = SpinChainConfig::<f64>::three_ion();
        cfg.couplings.insert(1, AngularFrequency::zero());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseModel::dephasing(0.0_f64).validate(3).is_err());
        assert!(NoiseModel::dephasing(0.02_f64)
            .with_trajectories(0, 1)
            .validate(3)
            .is_err());
        NoiseModel::<f64>::dephasing(0.02).validate(3).unwrap();
    }
}
