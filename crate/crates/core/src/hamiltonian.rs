//! Rotating-frame perceptron Hamiltonian, its spectrum, and the sigmoid
//! activation it produces.
//!
//! With ħ = 1 the register Hamiltonian is
//!
//! ```text
//! H = ½(−Ω σx⁽ⁱ⁾ − Θ σz⁽ⁱ⁾σz⁽ᵇ⁾ − σz⁽ⁱ⁾ Σⱼ αⱼJᵢⱼ σz⁽ʲ⁾) + Σₖ ½νₖ σz⁽ᵏ⁾
//! ```
//!
//! The lab-frame chain Hamiltonian ½Σνₖσz⁽ᵏ⁾ − ½Σ Jᵢⱼ σz⁽ⁱ⁾σz⁽ʲ⁾ reduces to
//! this form after moving to the frame of the dressing field on the target
//! and dropping counter-rotating terms; the ν terms only survive as optional
//! detunings. The control–bias coupling shifts phases of the control and bias
//! qubits only and is left out.
//!
//! Every term except the drive is diagonal in the control and bias qubits, so
//! for a fixed basis configuration of those qubits the target sees the
//! two-level Hamiltonian h = −½(Ω σx + x σz) with x the input field.

use num_complex::Complex;

use crate::config::SpinChainConfig;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, CMatrix, RMatrix, SymmetricEigen};
use crate::scalar::Real;
use crate::state::{gates::Gate, qubit_mask, Bits, RegisterState, MAX_PURE_QUBITS};
use crate::units::AngularFrequency;

/// Dense register Hamiltonian. Real symmetric in the computational basis.
#[derive(Clone, Debug)]
pub struct Hamiltonian<T> {
    n_qubits: usize,
    matrix: RMatrix<T>,
}

impl<T: Real> Hamiltonian<T> {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &RMatrix<T> {
        &self.matrix
    }

    pub fn to_complex(&self) -> CMatrix<T> {
        CMatrix::from_real(&self.matrix)
    }

    pub fn eigen(&self) -> SymmetricEigen<T> {
        symmetric_eigen(&self.matrix)
    }

    /// exp(−i H t)
    pub fn propagator(&self, t: T) -> CMatrix<T> {
        self.eigen().propagator(t)
    }
}

/// Builds the register Hamiltonian for drive amplitude `omega`.
pub fn build_hamiltonian<T: Real>(
    config: &SpinChainConfig<T>,
    omega: AngularFrequency<T>,
) -> Result<Hamiltonian<T>> {
    config.validate()?;
    if !(omega.is_finite() && omega.0 >= T::zero()) {
        return Err(Error::InvalidConfig(format!(
            "drive amplitude must be non-negative, got {omega}"
        )));
    }
    let n = config.n_qubits;
    if n > MAX_PURE_QUBITS {
        return Err(Error::TooLarge {
            n_qubits: n,
            limit: MAX_PURE_QUBITS,
        });
    }
    let dim = 1usize << n;
    let target_mask = qubit_mask(n, config.target);
    let mut matrix = RMatrix::zeros(dim);
    for (index, diag) in diagonal_energies(config).into_iter().enumerate() {
        matrix[(index, index)] = diag;
        matrix[(index, index ^ target_mask)] = -T::lit(0.5) * omega.0;
    }
    Ok(Hamiltonian { n_qubits: n, matrix })
}

/// Diagonal of H in the computational basis; it does not depend on Ω.
pub(crate) fn diagonal_energies<T: Real>(config: &SpinChainConfig<T>) -> Vec<T> {
    let n = config.n_qubits;
    let half = T::lit(0.5);
    (0..1usize << n)
        .map(|index| {
            let bits = Bits::from_index(n, index);
            let z_target: T = bits.z(config.target);
            let mut diag = -half * z_target * config.field(&bits).0;
            for k in 0..n {
                diag += half * config.detuning(k).0 * bits.z::<T>(k);
            }
            diag
        })
        .collect()
}

/// Sigmoid activation f(u) = ½(1 + u/√(1+u²)), the ground-state excitation
/// probability of the dressed target at u = x/Ω.
pub fn activation<T: Real>(u: T) -> T {
    let half = T::lit(0.5);
    let root = (T::one() + u * u).sqrt();
    if u >= T::zero() {
        half * (T::one() + u / root)
    } else {
        // ½(1 − |u|/r) rewritten without cancellation
        half / (root * (root - u))
    }
}

/// Excitation probability for an explicit (x, Ω) pair, valid at Ω = 0.
pub fn activation_of_field<T: Real>(x: AngularFrequency<T>, omega: AngularFrequency<T>) -> Result<T> {
    let (x, omega) = (x.0, omega.0.abs());
    let gap = x.hypot(omega);
    if gap == T::zero() {
        return Err(Error::Degenerate);
    }
    let half = T::lit(0.5);
    Ok(if x >= T::zero() {
        half * (T::one() + x / gap)
    } else {
        half * omega * omega / (gap * (gap - x))
    })
}

/// Input field seen by the target for one basis configuration of the
/// controls and bias.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerceptronField<T> {
    pub x: AngularFrequency<T>,
}

impl<T: Real> PerceptronField<T> {
    /// x = Σⱼ αⱼJᵢⱼ zⱼ + Θ z_b, minus the target detuning.
    pub fn of(config: &SpinChainConfig<T>, bits: &Bits) -> Self {
        Self {
            x: config.field(bits) - config.detuning(config.target),
        }
    }
}

/// Target ground state of the effective two-level Hamiltonian and its gap.
#[derive(Clone, Debug)]
pub struct GroundState<T> {
    pub state: RegisterState<T>,
    pub gap: AngularFrequency<T>,
}

/// √(1−f)|0⟩ + √f|1⟩ with f = f(x/Ω), plus the gap √(Ω² + x²).
pub fn instantaneous_ground_state<T: Real>(
    config: &SpinChainConfig<T>,
    omega: AngularFrequency<T>,
    bits: &Bits,
) -> Result<GroundState<T>> {
    if bits.len() != config.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: config.n_qubits,
            found: bits.len(),
        });
    }
    let x = PerceptronField::of(config, bits).x;
    two_level_ground_state(x, omega)
}

pub fn two_level_ground_state<T: Real>(
    x: AngularFrequency<T>,
    omega: AngularFrequency<T>,
) -> Result<GroundState<T>> {
    let p1 = activation_of_field(x, omega)?;
    let gap = AngularFrequency(x.0.hypot(omega.0));
    // 1 − p1 computed on the complementary branch to keep precision
    let p0 = activation_of_field(-x, omega)?;
    let amplitudes = vec![
        Complex::new(p0.sqrt(), T::zero()),
        Complex::new(p1.sqrt(), T::zero()),
    ];
    Ok(GroundState {
        state: RegisterState::Pure {
            n_qubits: 1,
            amplitudes,
        },
        gap,
    })
}

/// Ground state of the full register restricted to the sector where the
/// non-target qubits sit in `bits`, found by dense diagonalization of the
/// whole 2ⁿ-dimensional Hamiltonian.
pub fn sector_ground_state<T: Real>(
    config: &SpinChainConfig<T>,
    omega: AngularFrequency<T>,
    bits: &Bits,
) -> Result<(RegisterState<T>, Vec<T>)> {
    if bits.len() != config.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: config.n_qubits,
            found: bits.len(),
        });
    }
    let h = build_hamiltonian(config, omega)?;
    let eig = h.eigen();
    let n = config.n_qubits;
    let mask = qubit_mask(n, config.target);
    let base = bits.index() & !mask;
    let sector = [base, base | mask];

    let mut levels = Vec::new();
    let mut ground = None;
    for k in 0..eig.values.len() {
        let weight: T = sector.iter().map(|&i| eig.vectors[(i, k)].powi(2)).sum();
        if weight > T::lit(0.5) {
            if ground.is_none() {
                ground = Some(k);
            }
            levels.push(eig.values[k]);
        }
    }
    let k = ground.ok_or_else(|| Error::Numerical("no eigenvector in the sector".into()))?;
    if levels.len() == 2 && (levels[1] - levels[0]) <= T::epsilon() * h.matrix().norm_inf() {
        return Err(Error::Degenerate);
    }
    let amplitudes = eig
        .vectors
        .col(k)
        .into_iter()
        .map(|v| Complex::new(v, T::zero()))
        .collect();
    Ok((
        RegisterState::Pure {
            n_qubits: n,
            amplitudes,
        },
        levels,
    ))
}

/// exp(−i h t) for h = −½(Ω σx + x σz), in closed form.
pub fn two_level_propagator<T: Real>(omega: T, x: T, t: T) -> Gate<T> {
    let z = Complex::new(T::zero(), T::zero());
    let gap = omega.hypot(x);
    if gap == T::zero() {
        let one = Complex::new(T::one(), T::zero());
        return [[one, z], [z, one]];
    }
    let (s, c) = (gap * t * T::lit(0.5)).sin_cos();
    let sx = s * omega / gap;
    let sz = s * x / gap;
    // σz = diag(−1, +1) in the (|0⟩, |1⟩) basis
    [
        [Complex::new(c, -sz), Complex::new(T::zero(), sx)],
        [Complex::new(T::zero(), sx), Complex::new(c, sz)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen;
    use std::collections::BTreeMap;

    fn hz(v: f64) -> AngularFrequency<f64> {
        AngularFrequency::from_hz(v)
    }

    /// Independent construction from Kronecker products of Pauli matrices.
    fn kron_oracle(cfg: &SpinChainConfig<f64>, omega: f64) -> RMatrix<f64> {
        let n = cfg.n_qubits;
        let sx = [[0.0, 1.0], [1.0, 0.0]];
        let sz = [[-1.0, 0.0], [0.0, 1.0]];
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let kron_all = |ops: &[[[f64; 2]; 2]]| -> RMatrix<f64> {
            let mut m = RMatrix::identity(1);
            for op in ops {
                let d = m.dim();
                m = RMatrix::from_fn(d * 2, |r, c| m[(r / 2, c / 2)] * op[r % 2][c % 2]);
            }
            m
        };
        let term = |placements: &[(usize, [[f64; 2]; 2])]| {
            let ops: Vec<_> = (0..n)
                .map(|k| {
                    placements
                        .iter()
                        .find(|(q, _)| *q == k)
                        .map(|(_, o)| *o)
                        .unwrap_or(id)
                })
                .collect();
            kron_all(&ops)
        };
        let dim = 1 << n;
        let mut h = RMatrix::zeros(dim);
        let mut add = |m: RMatrix<f64>, w: f64| {
            for r in 0..dim {
                for c in 0..dim {
                    h[(r, c)] += w * m[(r, c)];
                }
            }
        };
        add(term(&[(cfg.target, sx)]), -0.5 * omega);
        if let Some(b) = cfg.bias {
            add(term(&[(cfg.target, sz), (b, sz)]), -0.5 * cfg.bias_strength.0);
        }
        for j in cfg.controls() {
            add(term(&[(cfg.target, sz), (j, sz)]), -0.5 * cfg.effective_coupling(j).0);
        }
        for k in 0..n {
            add(term(&[(k, sz)]), 0.5 * cfg.detuning(k).0);
        }
        h
    }

    #[test]
    fn matches_kronecker_oracle() {
        let mut cfg = SpinChainConfig::three_ion();
        cfg.set_scale(0, -0.4);
        cfg.bias_strength = hz(12.0);
        cfg.detunings = vec![hz(3.0), hz(-5.0), hz(1.5)];
        let h = build_hamiltonian(&cfg, hz(250.0)).unwrap();
        let oracle = kron_oracle(&cfg, hz(250.0).0);
        for r in 0..8 {
            for c in 0..8 {
                assert!((h.matrix()[(r, c)] - oracle[(r, c)]).abs() < 1e-12);
            }
        }
        assert!(h.matrix().max_asymmetry() < 1e-12);
    }

    #[test]
    fn zero_operator_without_terms() {
        let mut cfg = SpinChainConfig::<f64>::three_ion();
        cfg.couplings = BTreeMap::from([(0, AngularFrequency::zero())]);
        cfg.bias_strength = AngularFrequency::zero();
        let h = build_hamiltonian(&cfg, AngularFrequency::zero()).unwrap();
        assert_eq!(h.matrix().norm_inf(), 0.0);
    }

    #[test]
    fn diagonal_entries_are_half_field() {
        let cfg = SpinChainConfig::<f64>::three_ion();
        let h = build_hamiltonian(&cfg, AngularFrequency::zero()).unwrap();
        for index in 0..8 {
            let bits = Bits::from_index(3, index);
            let x = cfg.field(&bits).0;
            let z_t: f64 = bits.z(cfg.target);
            // target |0> carries +x/2, target |1> carries -x/2
            assert!((h.matrix()[(index, index)] + 0.5 * z_t * x).abs() < 1e-12);
            for c in 0..8 {
                if c != index {
                    assert_eq!(h.matrix()[(index, c)], 0.0);
                }
            }
        }
    }

    #[test]
    fn single_drive_eigenvalues() {
        let omega = hz(1000.0);
        let g = two_level_ground_state(AngularFrequency::zero(), omega).unwrap();
        assert!((g.gap.0 - omega.0).abs() < 1e-9);
        // eigenvalues of the two-level block are ±Ω/2 = ±π·1 kHz
        let mut cfg = SpinChainConfig::<f64>::with_controls(&[AngularFrequency::zero()], hz(37.5));
        cfg.validate().unwrap();
        cfg.couplings.clear();
        let e = build_hamiltonian(&cfg, omega).unwrap().eigen();
        let pi_khz = std::f64::consts::PI * 1000.0;
        assert!((e.values[0] + pi_khz).abs() < 1e-9);
        assert!((e.values[3] - pi_khz).abs() < 1e-9);
    }

    #[test]
    fn negative_drive_rejected() {
        let cfg = SpinChainConfig::<f64>::three_ion();
        assert!(build_hamiltonian(&cfg, hz(-1.0)).is_err());
    }

    /// Lowest eigenvector of the 2×2 matrix [[x/2, −Ω/2], [−Ω/2, −x/2]].
    fn two_by_two_oracle(u: f64) -> f64 {
        let mut m = RMatrix::zeros(2);
        m[(0, 0)] = 0.5 * u;
        m[(1, 1)] = -0.5 * u;
        m[(0, 1)] = -0.5;
        m[(1, 0)] = -0.5;
        symmetric_eigen(&m).vectors[(1, 0)].powi(2)
    }

    #[test]
    fn activation_examples() {
        assert_eq!(activation(0.0_f64), 0.5);
        assert!((activation(1.0_f64) - two_by_two_oracle(1.0)).abs() < 1e-14);
        assert!((activation(1.0_f64) - 0.853_553_390_593_273_8).abs() < 1e-12);
        assert!((activation(-3.0_f64) - two_by_two_oracle(-3.0)).abs() < 1e-14);
        assert!((activation(-3.0_f64) - 0.025_658_350_974_743_1).abs() < 1e-12);
    }

    #[test]
    fn activation_saturates_without_cancellation() {
        let f = activation(-1e8_f64);
        assert!(f > 0.0 && f < 1e-16);
        assert!((activation(1e8_f64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ground_state_strong_drive_is_plus() {
        let x = hz(37.5);
        let g = two_level_ground_state(x, x * 1e4).unwrap();
        assert!((g.state.probability_one(0).unwrap() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn ground_state_classical_limit() {
        let g = two_level_ground_state(hz(10.0), AngularFrequency::zero()).unwrap();
        let a = g.state.amplitudes().unwrap();
        assert_eq!(a[1].re, 1.0);
        assert_eq!(a[0].re, 0.0);
    }

    #[test]
    fn ground_state_at_unit_ratio() {
        let g = two_level_ground_state(hz(20.0), hz(20.0)).unwrap();
        let p = g.state.probability_one(0).unwrap();
        assert!((p - two_by_two_oracle(1.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_point_is_error() {
        assert!(matches!(
            two_level_ground_state::<f64>(AngularFrequency::zero(), AngularFrequency::zero()),
            Err(Error::Degenerate)
        ));
    }

    #[test]
    fn ground_state_from_register_config() {
        let cfg = SpinChainConfig::<f64>::three_ion();
        let bits: Bits = "100".parse().unwrap();
        // x = J·(+1) + Θ·(−1) = 0
        let g = instantaneous_ground_state(&cfg, hz(50.0), &bits).unwrap();
        assert!((g.state.probability_one(0).unwrap() - 0.5).abs() < 1e-12);
        assert!((g.gap.0 - hz(50.0).0).abs() < 1e-9);
    }

    #[test]
    fn sector_ground_state_matches_activation() {
        let cfg = SpinChainConfig::<f64>::three_ion();
        let omega = hz(40.0);
        for index in 0..8 {
            let bits = Bits::from_index(3, index);
            let (state, levels) = sector_ground_state(&cfg, omega, &bits).unwrap();
            let x = cfg.field(&bits);
            let p = state.probability_one(cfg.target).unwrap();
            assert!((p - activation(x / omega)).abs() < 1e-10);
            let gap = levels[1] - levels[0];
            assert!((gap - x.0.hypot(omega.0)).abs() <= 1e-10 * gap);
        }
    }

    #[test]
    fn closed_form_propagator_matches_dense() {
        let (omega, x, t) = (3.1_f64, -1.7, 0.9);
        let u = two_level_propagator(omega, x, t);
        let mut m = RMatrix::zeros(2);
        m[(0, 0)] = 0.5 * x;
        m[(1, 1)] = -0.5 * x;
        m[(0, 1)] = -0.5 * omega;
        m[(1, 0)] = -0.5 * omega;
        let dense = symmetric_eigen(&m).propagator(t);
        for r in 0..2 {
            for c in 0..2 {
                assert!((u[r][c] - dense[(r, c)]).norm() < 1e-14);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn activation_antisymmetric(u in -1e3f64..1e3) {
                prop_assert!((activation(u) + activation(-u) - 1.0).abs() < 1e-14);
            }

            #[test]
            fn activation_monotone(a in -50.0f64..50.0, d in 1e-6f64..10.0) {
                prop_assert!(activation(a) < activation(a + d));
            }

            #[test]
            fn activation_bounded(u in -1e12f64..1e12) {
                let f = activation(u);
                prop_assert!((0.0..=1.0).contains(&f));
            }
        }
    }
}
