//! Time evolution under piecewise-constant drive, with optional Markovian
//! dephasing.
//!
//! Within one pulse the Hamiltonian is constant and is exponentiated exactly.
//! The default [`ForwardModel::Block`] uses the fact that H only couples basis
//! states that differ in the target bit: each such pair evolves under its own
//! 2×2 block, whose exponential is known in closed form. [`ForwardModel::Dense`]
//! diagonalizes the full 2ⁿ×2ⁿ matrix instead and serves as a cross-check.
//! Dephasing is applied after each pulse.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{NoiseModel, Representation, SpinChainConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, diagonal_energies, two_level_propagator};
use crate::linalg::CMatrix;
use crate::scalar::{from_usize, lit, Real};
use crate::schedule::PulseSchedule;
use crate::seeding::stream_rng;
use crate::state::{apply_to_vector, gates::Gate, qubit_mask, RegisterState, MAX_MIXED_QUBITS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ForwardModel {
    /// Closed-form 2×2 blocks per control configuration.
    #[default]
    Block,
    /// Dense diagonalization of the full register Hamiltonian per pulse.
    Dense,
}

/// Mean of a sampled quantity with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub stderr: T,
}

impl<T: Real> Estimate<T> {
    pub fn exact(mean: T) -> Self {
        Self {
            mean,
            stderr: T::zero(),
        }
    }

    pub fn from_samples(samples: &[T]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self::exact(T::nan());
        }
        let nf: T = from_usize(n);
        let mean = samples.iter().copied().sum::<T>() / nf;
        if n == 1 {
            return Self::exact(mean);
        }
        let var = samples.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (nf - T::one());
        Self {
            mean,
            stderr: (var / nf).sqrt(),
        }
    }
}

/// Pure final states of a stochastic dephasing unraveling.
#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble<T> {
    pub n_qubits: usize,
    pub states: Vec<Vec<Complex<T>>>,
}

impl<T: Real> TrajectoryEnsemble<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Ensemble mean of P(qubit = 1) and its standard error.
    pub fn probability_one(&self, qubit: usize) -> Result<Estimate<T>> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let mask = qubit_mask(self.n_qubits, qubit);
        let samples: Vec<T> = self
            .states
            .iter()
            .map(|psi| {
                psi.iter()
                    .enumerate()
                    .filter(|(i, _)| i & mask != 0)
                    .map(|(_, a)| a.norm_sqr())
                    .sum()
            })
            .collect();
        Ok(Estimate::from_samples(&samples))
    }

    /// Average of the trajectory projectors.
    pub fn mean_state(&self) -> Result<RegisterState<T>> {
        if self.n_qubits > MAX_MIXED_QUBITS {
            return Err(Error::TooLarge {
                n_qubits: self.n_qubits,
                limit: MAX_MIXED_QUBITS,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut rho = CMatrix::zeros(dim);
        let w = T::one() / from_usize(self.states.len().max(1));
        for psi in &self.states {
            for r in 0..dim {
                for c in 0..dim {
                    rho[(r, c)] += psi[r] * psi[c].conj() * w;
                }
            }
        }
        Ok(RegisterState::Mixed {
            n_qubits: self.n_qubits,
            rho,
        })
    }
}

/// Per-pulse unitary in one of the two forward models.
enum Step<T> {
    /// One 2×2 gate per basis index with the target bit clear.
    Blocks { mask: usize, gates: Vec<Gate<T>> },
    Dense(CMatrix<T>),
}

struct Stepper<'a, T> {
    config: &'a SpinChainConfig<T>,
    model: ForwardModel,
    mask: usize,
    diag: Vec<T>,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn new(config: &'a SpinChainConfig<T>, model: ForwardModel) -> Self {
        Self {
            config,
            model,
            mask: qubit_mask(config.n_qubits, config.target),
            diag: diagonal_energies(config),
        }
    }

    fn step(&self, omega: T, duration: T) -> Result<Step<T>> {
        match self.model {
            ForwardModel::Block => {
                let half = lit::<T>(0.5);
                let gates = (0..self.diag.len())
                    .map(|i0| {
                        if i0 & self.mask != 0 {
                            return [[Complex::new(T::zero(), T::zero()); 2]; 2];
                        }
                        let (a, b) = (self.diag[i0], self.diag[i0 | self.mask]);
                        let mut g = two_level_propagator(omega, a - b, duration);
                        let phase = Complex::from_polar(T::one(), -(a + b) * half * duration);
                        for row in g.iter_mut() {
                            for v in row.iter_mut() {
                                *v *= phase;
                            }
                        }
                        g
                    })
                    .collect();
                Ok(Step::Blocks {
                    mask: self.mask,
                    gates,
                })
            }
            ForwardModel::Dense => {
                let h = build_hamiltonian(self.config, crate::units::AngularFrequency(omega))?;
                Ok(Step::Dense(h.propagator(duration)))
            }
        }
    }
}

impl<T: Real> Step<T> {
    fn apply_vector(&self, psi: &mut Vec<Complex<T>>) {
        match self {
            Self::Blocks { mask, gates } => {
                for i0 in (0..psi.len()).filter(|i| i & mask == 0) {
                    let i1 = i0 | mask;
                    let g = &gates[i0];
                    let (a0, a1) = (psi[i0], psi[i1]);
                    psi[i0] = g[0][0] * a0 + g[0][1] * a1;
                    psi[i1] = g[1][0] * a0 + g[1][1] * a1;
                }
            }
            Self::Dense(u) => *psi = u.matvec(psi),
        }
    }

    fn apply_density(&self, rho: &mut CMatrix<T>) {
        match self {
            Self::Blocks { mask, gates } => {
                let dim = rho.dim();
                for c in 0..dim {
                    for i0 in (0..dim).filter(|i| i & mask == 0) {
                        let i1 = i0 | mask;
                        let g = &gates[i0];
                        let (a0, a1) = (rho[(i0, c)], rho[(i1, c)]);
                        rho[(i0, c)] = g[0][0] * a0 + g[0][1] * a1;
                        rho[(i1, c)] = g[1][0] * a0 + g[1][1] * a1;
                    }
                }
                for r in 0..dim {
                    for j0 in (0..dim).filter(|j| j & mask == 0) {
                        let j1 = j0 | mask;
                        let g = &gates[j0];
                        let (a0, a1) = (rho[(r, j0)], rho[(r, j1)]);
                        rho[(r, j0)] = a0 * g[0][0].conj() + a1 * g[0][1].conj();
                        rho[(r, j1)] = a0 * g[1][0].conj() + a1 * g[1][1].conj();
                    }
                }
            }
            Self::Dense(u) => *rho = rho.conjugate_by(u),
        }
    }
}

/// Summed dephasing rate Σ 1/T2_q over the qubits set in each index
/// difference `r ^ c`.
struct DephasingTable<T> {
    rates: Vec<T>,
}

impl<T: Real> DephasingTable<T> {
    fn new(noise: &NoiseModel<T>, n_qubits: usize) -> Self {
        let per_qubit: Vec<T> = (0..n_qubits)
            .map(|q| T::one() / noise.t2_of(q))
            .collect();
        let rates = (0..1usize << n_qubits)
            .map(|diff| {
                (0..n_qubits)
                    .filter(|&q| diff & qubit_mask(n_qubits, q) != 0)
                    .map(|q| per_qubit[q])
                    .sum()
            })
            .collect();
        Self { rates }
    }

    fn apply(&self, rho: &mut CMatrix<T>, dt: T) {
        let factors: Vec<T> = self.rates.iter().map(|&g| (-g * dt).exp()).collect();
        let dim = rho.dim();
        for r in 0..dim {
            for c in 0..dim {
                if r != c {
                    rho[(r, c)] *= factors[r ^ c];
                }
            }
        }
    }
}

fn check_inputs<T: Real>(
    initial: &RegisterState<T>,
    config: &SpinChainConfig<T>,
    schedule: &PulseSchedule<T>,
    noise: &NoiseModel<T>,
) -> Result<()> {
    config.validate()?;
    noise.validate(config.n_qubits)?;
    if initial.n_qubits() != config.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: config.n_qubits,
            found: initial.n_qubits(),
        });
    }
    if schedule.is_empty() {
        return Err(Error::InvalidSchedule("schedule has no segments".into()));
    }
    if schedule
        .segments
        .iter()
        .any(|s| !(s.duration >= T::zero()) || !(s.amplitude.0 >= T::zero()))
    {
        return Err(Error::InvalidSchedule(
            "segments need non-negative durations and amplitudes".into(),
        ));
    }
    Ok(())
}

/// Evolves `initial` through every pulse of `schedule`.
///
/// Noiseless pure states stay pure. With dephasing the result is a density
/// matrix: propagated exactly, or averaged over unravelled trajectories when
/// the noise model asks for them.
pub fn propagate_piecewise<T: Real>(
    initial: &RegisterState<T>,
    config: &SpinChainConfig<T>,
    schedule: &PulseSchedule<T>,
    noise: &NoiseModel<T>,
) -> Result<RegisterState<T>> {
    propagate_with(initial, config, schedule, noise, ForwardModel::Block)
}

pub fn propagate_with<T: Real>(
    initial: &RegisterState<T>,
    config: &SpinChainConfig<T>,
    schedule: &PulseSchedule<T>,
    noise: &NoiseModel<T>,
    model: ForwardModel,
) -> Result<RegisterState<T>> {
    check_inputs(initial, config, schedule, noise)?;
    if noise.is_noisy() && noise.representation == Representation::Trajectories {
        return propagate_trajectories_with(initial, config, schedule, noise, model)?.mean_state();
    }
    let stepper = Stepper::new(config, model);
    let n = config.n_qubits;
    if !noise.is_noisy() {
        let mut state = initial.clone();
        for seg in &schedule.segments {
            let step = stepper.step(seg.amplitude.0, seg.duration)?;
            match &mut state {
                RegisterState::Pure { amplitudes, .. } => step.apply_vector(amplitudes),
                RegisterState::Mixed { rho, .. } => step.apply_density(rho),
            }
        }
        return Ok(state);
    }
    let mut rho = initial.density_matrix()?;
    let table = DephasingTable::new(noise, n);
    for seg in &schedule.segments {
        stepper.step(seg.amplitude.0, seg.duration)?.apply_density(&mut rho);
        table.apply(&mut rho, seg.duration);
    }
    Ok(RegisterState::Mixed { n_qubits: n, rho })
}

/// Unravels dephasing into random σz kicks: after each pulse of length dt,
/// qubit q is flipped in phase with probability (1 − e^{−dt/T2_q})/2, which
/// reproduces the dephasing channel on average. Trajectory `k` draws from
/// its own stream derived from `noise.seed`, so results do not depend on
/// the thread count.
pub fn propagate_trajectories<T: Real>(
    initial: &RegisterState<T>,
    config: &SpinChainConfig<T>,
    schedule: &PulseSchedule<T>,
    noise: &NoiseModel<T>,
) -> Result<TrajectoryEnsemble<T>> {
    check_inputs(initial, config, schedule, noise)?;
    propagate_trajectories_with(initial, config, schedule, noise, ForwardModel::Block)
}

fn propagate_trajectories_with<T: Real>(
    initial: &RegisterState<T>,
    config: &SpinChainConfig<T>,
    schedule: &PulseSchedule<T>,
    noise: &NoiseModel<T>,
    model: ForwardModel,
) -> Result<TrajectoryEnsemble<T>> {
    let psi0 = initial
        .amplitudes()
        .ok_or_else(|| Error::Representation("trajectories need a pure initial state".into()))?
        .to_vec();
    let n = config.n_qubits;
    let stepper = Stepper::new(config, model);
    let steps: Vec<Step<T>> = schedule
        .segments
        .iter()
        .map(|s| stepper.step(s.amplitude.0, s.duration))
        .collect::<Result<_>>()?;
    let kick_probabilities: Vec<Vec<f64>> = schedule
        .segments
        .iter()
        .map(|s| {
            (0..n)
                .map(|q| {
                    if noise.is_noisy() {
                        -(-s.duration / noise.t2_of(q)).exp_m1().as_f64() * 0.5
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let n_traj = if noise.is_noisy() { noise.n_trajectories } else { 1 };
    let states = (0..n_traj as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(noise.seed, k);
            let mut psi = psi0.clone();
            for (step, probs) in steps.iter().zip(&kick_probabilities) {
                step.apply_vector(&mut psi);
                for (q, &p) in probs.iter().enumerate() {
                    if p > 0.0 && rng.random::<f64>() < p {
                        let mask = qubit_mask(n, q);
                        psi.iter_mut()
                            .enumerate()
                            .filter(|(i, _)| i & mask != 0)
                            .for_each(|(_, a)| *a = -*a);
                    }
                }
            }
            psi
        })
        .collect();
    Ok(TrajectoryEnsemble { n_qubits: n, states })
}

/// Phase damping of one qubit: every coherence between basis states that
/// differ in `qubit` is multiplied by exp(−duration/t2).
pub fn apply_dephasing_channel<T: Real>(
    state: &mut RegisterState<T>,
    qubit: usize,
    duration: T,
    t2: T,
) -> Result<()> {
    let n = state.n_qubits();
    if qubit >= n {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            n_qubits: n,
        });
    }
    if !(t2.is_finite() && t2 > T::zero()) || !(duration >= T::zero()) {
        return Err(Error::InvalidNoise(
            "dephasing needs t2 > 0 and a non-negative duration".into(),
        ));
    }
    let RegisterState::Mixed { rho, .. } = state else {
        return Err(Error::Representation(
            "dephasing channel needs a density matrix".into(),
        ));
    };
    let mask = qubit_mask(n, qubit);
    let f = (-duration / t2).exp();
    let dim = rho.dim();
    for r in 0..dim {
        for c in 0..dim {
            if (r ^ c) & mask != 0 {
                rho[(r, c)] *= f;
            }
        }
    }
    Ok(())
}

/// Dephasing of every qubit at its own T2 from `noise` for a time `dt`.
pub fn apply_register_dephasing<T: Real>(
    state: &mut RegisterState<T>,
    noise: &NoiseModel<T>,
    dt: T,
) -> Result<()> {
    let n = state.n_qubits();
    noise.validate(n)?;
    if !(dt >= T::zero()) {
        return Err(Error::InvalidNoise("time step must be non-negative".into()));
    }
    match state {
        RegisterState::Pure { .. } => Err(Error::Representation(
            "dephasing channel needs a density matrix".into(),
        )),
        RegisterState::Mixed { rho, .. } => {
            if noise.is_noisy() {
                DephasingTable::new(noise, n).apply(rho, dt);
            }
            Ok(())
        }
    }
}

/// Step-size control for [`reference_propagator`].
#[derive(Clone, Copy, Debug)]
pub struct ReferenceOptions<T> {
    /// Largest ‖H‖∞·h allowed per RK4 step, in radians.
    pub max_phase_step: T,
    pub min_substeps: usize,
}

impl<T: Real> Default for ReferenceOptions<T> {
    fn default() -> Self {
        Self {
            max_phase_step: lit(0.01),
            min_substeps: 10,
        }
    }
}

/// Independent check of [`propagate_piecewise`]: integrates the
/// Schrödinger equation through each pulse with classical RK4 on the dense
/// Hamiltonian. Noiseless pure states only.
pub fn reference_propagator<T: Real>(
    initial: &RegisterState<T>,
    config: &SpinChainConfig<T>,
    schedule: &PulseSchedule<T>,
    options: ReferenceOptions<T>,
) -> Result<RegisterState<T>> {
    check_inputs(initial, config, schedule, &NoiseModel::noiseless())?;
    if !(options.max_phase_step > T::zero() && options.max_phase_step <= lit(0.1)) {
        return Err(Error::InvalidConfig(format!(
            "RK4 phase step {} outside (0, 0.1] rad",
            options.max_phase_step
        )));
    }
    let mut psi = initial
        .amplitudes()
        .ok_or_else(|| Error::Representation("reference propagator needs a pure state".into()))?
        .to_vec();
    let minus_i = Complex::new(T::zero(), -T::one());
    for seg in &schedule.segments {
        let h = build_hamiltonian(config, seg.amplitude)?;
        let m = h.matrix();
        let phase = m.norm_inf() * seg.duration;
        let substeps = ((phase / options.max_phase_step).ceil().to_usize().unwrap_or(usize::MAX))
            .max(options.min_substeps);
        let dt = seg.duration / from_usize(substeps);
        let f = |v: &[Complex<T>]| -> Vec<Complex<T>> {
            m.matvec(v).into_iter().map(|a| a * minus_i).collect()
        };
        let axpy = |v: &[Complex<T>], k: &[Complex<T>], s: T| -> Vec<Complex<T>> {
            v.iter().zip(k).map(|(&a, &b)| a + b * s).collect()
        };
        let half = lit::<T>(0.5);
        for _ in 0..substeps {
            let k1 = f(&psi);
            let k2 = f(&axpy(&psi, &k1, dt * half));
            let k3 = f(&axpy(&psi, &k2, dt * half));
            let k4 = f(&axpy(&psi, &k3, dt));
            let sixth = dt / lit(6.0);
            for i in 0..psi.len() {
                psi[i] += (k1[i] + (k2[i] + k3[i]) * lit::<T>(2.0) + k4[i]) * sixth;
            }
        }
    }
    Ok(RegisterState::Pure {
        n_qubits: config.n_qubits,
        amplitudes: psi,
    })
}

/// 2×2 density matrix of a lone target qubit.
pub type Qubit<T> = [[Complex<T>; 2]; 2];

/// Evolves a single target qubit seeing a fixed field `x` through the
/// schedule, with optional dephasing time `t2`. For control qubits held in
/// basis states this is exactly the target's reduced dynamics.
pub fn evolve_two_level<T: Real>(
    rho: &Qubit<T>,
    schedule: &PulseSchedule<T>,
    x: T,
    t2: Option<T>,
) -> Qubit<T> {
    let mut rho = *rho;
    for seg in &schedule.segments {
        let u = two_level_propagator(seg.amplitude.0, x, seg.duration);
        rho = conjugate2(&u, &rho);
        if let Some(t2) = t2 {
            let f = (-seg.duration / t2).exp();
            rho[0][1] *= f;
            rho[1][0] *= f;
        }
    }
    rho
}

/// Noiseless pure-state version of [`evolve_two_level`].
pub fn evolve_two_level_pure<T: Real>(
    psi: [Complex<T>; 2],
    schedule: &PulseSchedule<T>,
    x: T,
) -> [Complex<T>; 2] {
    let mut v = psi.to_vec();
    for seg in &schedule.segments {
        apply_to_vector(&mut v, 1, &two_level_propagator(seg.amplitude.0, x, seg.duration));
    }
    [v[0], v[1]]
}

pub(crate) fn conjugate2<T: Real>(u: &Gate<T>, rho: &Qubit<T>) -> Qubit<T> {
    let mut tmp = [[Complex::new(T::zero(), T::zero()); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            tmp[r][c] = u[r][0] * rho[0][c] + u[r][1] * rho[1][c];
        }
    }
    let mut out = tmp;
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = tmp[r][0] * u[c][0].conj() + tmp[r][1] * u[c][1].conj();
        }
    }
    out
}

pub fn pure_to_qubit<T: Real>(psi: [Complex<T>; 2]) -> Qubit<T> {
    let mut rho = [[Complex::new(T::zero(), T::zero()); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            rho[r][c] = psi[r] * psi[c].conj();
        }
    }
    rho
}
