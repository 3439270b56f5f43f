//! Layered networks: several perceptron gates applied in turn to the same
//! target, each with its own couplings, and weight synthesis for a truth
//! table.
//!
//! Each layer re-applies the Hadamard to the target and runs a fresh ramp;
//! nothing is reset in between, so coherence left on the target by one layer
//! carries into the next.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::config::{NoiseModel, Representation, SpinChainConfig};
use crate::error::{Error, Result};
use crate::evolve::{
    conjugate2, evolve_two_level, evolve_two_level_pure, propagate_with, pure_to_qubit,
    reference_propagator, ForwardModel, ReferenceOptions,
};
use crate::gate::{apply_gate, worst_case_field};
use crate::hamiltonian::activation_of_field;
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::scalar::{lit, Real};
use crate::schedule::{build_schedule, FaquadSpec, PulseSchedule};
use crate::seeding::{derive_seed, stream_rng};
use crate::state::{gates, make_basis_state, Bits, RegisterState};
use crate::units::AngularFrequency;

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    /// Effective coupling α_j·J of each control to the target.
    pub couplings: Vec<AngularFrequency<T>>,
    /// Coupling of the bias qubit (held in |1⟩); zero means no bias.
    pub bias: AngularFrequency<T>,
    pub schedule: FaquadSpec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateProgram<T> {
    pub layers: Vec<Layer<T>>,
    pub n_controls: usize,
    pub j_max: AngularFrequency<T>,
}

impl<T: Real> GateProgram<T> {
    /// Two-layer XNOR with hand-refined reference couplings
    /// (2π × {20.5, −26.5} Hz, then 2π × {18.9, −32.1} Hz) and the standard
    /// ramp to Ω_f = 2π×37.5 Hz in each layer.
    pub fn xnor_reference() -> Self {
        let j_max = AngularFrequency::from_hz(lit(crate::config::DEFAULT_J_MAX_HZ));
        let layer = |a: f64, b: f64| Layer {
            couplings: vec![
                AngularFrequency::from_hz(lit(a)),
                AngularFrequency::from_hz(lit(b)),
            ],
            bias: AngularFrequency::zero(),
            schedule: FaquadSpec::standard(j_max),
        };
        Self {
            layers: vec![layer(20.5, -26.5), layer(18.9, -32.1)],
            n_controls: 2,
            j_max,
        }
    }

    pub fn has_bias(&self) -> bool {
        self.layers.iter().any(|l| l.bias.0 != T::zero())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_controls + 1 + usize::from(self.has_bias())
    }

    /// Target index; controls are `0..n_controls`, the bias (if any) follows
    /// the target.
    pub fn target(&self) -> usize {
        self.n_controls
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidConfig("program needs at least one layer".into()));
        }
        if self.n_controls == 0 {
            return Err(Error::InvalidConfig("program needs at least one control".into()));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.couplings.len() != self.n_controls {
                return Err(Error::InvalidConfig(format!(
                    "layer {k} has {} couplings for {} controls",
                    layer.couplings.len(),
                    self.n_controls
                )));
            }
            self.layer_config(k).validate()?;
            layer.schedule.validate()?;
        }
        Ok(())
    }

    pub fn layer_config(&self, k: usize) -> SpinChainConfig<T> {
        let layer = &self.layers[k];
        let mut cfg = SpinChainConfig::with_controls(&layer.couplings, self.j_max);
        if self.has_bias() {
            cfg.n_qubits += 1;
            cfg.bias = Some(self.n_controls + 1);
            cfg.bias_strength = layer.bias;
        }
        cfg
    }

    /// Layer ramp, with x_ref defaulting to that layer's worst-case field.
    pub fn layer_schedule(&self, k: usize) -> Result<PulseSchedule<T>> {
        let cfg = self.layer_config(k);
        build_schedule(&self.layers[k].schedule.resolved(worst_case_field(std::iter::once(&cfg))))
    }

    pub fn schedules(&self) -> Result<Vec<PulseSchedule<T>>> {
        (0..self.layers.len()).map(|k| self.layer_schedule(k)).collect()
    }

    /// Register input for `controls`: target in |0⟩, bias in |1⟩.
    pub fn input_bits(&self, controls: &Bits) -> Result<Bits> {
        if controls.len() != self.n_controls {
            return Err(Error::DimensionMismatch {
                expected: self.n_controls,
                found: controls.len(),
            });
        }
        let mut bits = Bits::zeros(self.n_qubits());
        for (q, b) in controls.iter().enumerate() {
            bits.set(q, b);
        }
        if self.has_bias() {
            bits.set(self.n_controls + 1, true);
        }
        Ok(bits)
    }
}

/// How [`run_network`] evolves the register.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NetworkModel {
    /// Target alone under the field set by the control bits. Exact for
    /// controls in basis states, which H never changes.
    #[default]
    Reduced,
    /// Whole register, with the given per-pulse propagator.
    Register(ForwardModel),
    /// Whole register through the RK4 reference integrator (noiseless only).
    Reference,
}

/// Final target P₁ after all layers, starting from |controls, 0⟩.
pub fn run_network<T: Real>(
    program: &GateProgram<T>,
    controls: &Bits,
    noise: &NoiseModel<T>,
    model: NetworkModel,
) -> Result<T> {
    program.validate()?;
    let schedules = program.schedules()?;
    run_with_schedules(program, &schedules, controls, noise, model)
}

fn run_with_schedules<T: Real>(
    program: &GateProgram<T>,
    schedules: &[PulseSchedule<T>],
    controls: &Bits,
    noise: &NoiseModel<T>,
    model: NetworkModel,
) -> Result<T> {
    let target = program.target();
    let bits = program.input_bits(controls)?;
    let trajectories = noise.is_noisy() && noise.representation == Representation::Trajectories;
    match model {
        NetworkModel::Reduced if !trajectories => {
            let fields: Vec<T> = (0..program.layers.len())
                .map(|k| program.layer_config(k).field(&bits).0)
                .collect();
            Ok(reduced_p1(&fields, schedules, noise, target))
        }
        NetworkModel::Reference => {
            if noise.is_noisy() {
                return Err(Error::InvalidNoise(
                    "the reference integrator is noiseless".into(),
                ));
            }
            let mut state = make_basis_state(program.n_qubits(), &bits)?;
            for (k, schedule) in schedules.iter().enumerate() {
                let cfg = program.layer_config(k);
                state.apply_single_qubit(target, &gates::hadamard())?;
                state = reference_propagator(&state, &cfg, schedule, ReferenceOptions::default())?;
            }
            state.probability_one(target)
        }
        _ => {
            let forward = match model {
                NetworkModel::Register(f) => f,
                _ => ForwardModel::Block,
            };
            run_register(program, schedules, &bits, noise, forward)?.probability_one(target)
        }
    }
}

fn run_register<T: Real>(
    program: &GateProgram<T>,
    schedules: &[PulseSchedule<T>],
    bits: &Bits,
    noise: &NoiseModel<T>,
    forward: ForwardModel,
) -> Result<RegisterState<T>> {
    let target = program.target();
    let mut state = make_basis_state(program.n_qubits(), bits)?;
    for (k, schedule) in schedules.iter().enumerate() {
        let cfg = program.layer_config(k);
        if forward == ForwardModel::Block {
            state = apply_gate(&state, &cfg, schedule, noise)?;
        } else {
            state.apply_single_qubit(target, &gates::hadamard())?;
            state = propagate_with(&state, &cfg, schedule, noise, forward)?;
        }
    }
    Ok(state)
}

fn reduced_p1<T: Real>(
    fields: &[T],
    schedules: &[PulseSchedule<T>],
    noise: &NoiseModel<T>,
    target: usize,
) -> T {
    let zero = num_complex::Complex::new(T::zero(), T::zero());
    let one = num_complex::Complex::new(T::one(), T::zero());
    let h = gates::hadamard::<T>();
    if !noise.is_noisy() {
        let mut psi = [one, zero];
        for (&x, s) in fields.iter().zip(schedules) {
            psi = [
                h[0][0] * psi[0] + h[0][1] * psi[1],
                h[1][0] * psi[0] + h[1][1] * psi[1],
            ];
            psi = evolve_two_level_pure(psi, s, x);
        }
        return psi[1].norm_sqr();
    }
    let t2 = Some(noise.t2_of(target));
    let mut rho = pure_to_qubit([one, zero]);
    for (&x, s) in fields.iter().zip(schedules) {
        rho = conjugate2(&h, &rho);
        rho = evolve_two_level(&rho, s, x, t2);
    }
    rho[1][1].re
}

/// Desired target P₁ for every control input.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthTable {
    pub n_controls: usize,
    pub rows: BTreeMap<Bits, f64>,
}

impl TruthTable {
    pub fn new(n_controls: usize, rows: BTreeMap<Bits, f64>) -> Result<Self> {
        let table = Self { n_controls, rows };
        table.validate()?;
        Ok(table)
    }

    pub fn from_fn(n_controls: usize, f: impl Fn(&Bits) -> f64) -> Result<Self> {
        Self::new(
            n_controls,
            Bits::all(n_controls).map(|b| {
                let v = f(&b);
                (b, v)
            }).collect(),
        )
    }

    /// 1 on even parity, 0 on odd parity.
    pub fn xnor() -> Self {
        Self::from_fn(2, |b| if b.parity() { 0.0 } else { 1.0 }).expect("XNOR table is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_controls == 0 || self.n_controls > 10 {
            return Err(Error::InvalidConfig(format!(
                "truth table needs 1 to 10 controls, got {}",
                self.n_controls
            )));
        }
        let expected = 1usize << self.n_controls;
        if self.rows.len() != expected {
            return Err(Error::InvalidConfig(format!(
                "truth table has {} rows, expected {expected}",
                self.rows.len()
            )));
        }
        for (bits, &p) in &self.rows {
            if bits.len() != self.n_controls {
                return Err(Error::InvalidConfig(format!(
                    "row {bits} does not have {} bits",
                    self.n_controls
                )));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("row {bits} target {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Σ (achieved − desired)² over rows present in both tables.
    pub fn loss(&self, achieved: &TruthTable) -> f64 {
        self.rows
            .iter()
            .map(|(b, &want)| {
                let got = achieved.rows.get(b).copied().unwrap_or(f64::NAN);
                (got - want).powi(2)
            })
            .sum()
    }
}

/// Achieved outputs plus the final P₁ of every control qubit for each input.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthTableReport {
    pub outputs: TruthTable,
    pub control_populations: BTreeMap<Bits, Vec<f64>>,
}

/// Runs the whole register for every control input.
pub fn evaluate_truth_table<T: Real>(
    program: &GateProgram<T>,
    noise: &NoiseModel<T>,
) -> Result<TruthTableReport> {
    program.validate()?;
    noise.validate(program.n_qubits())?;
    let schedules = program.schedules()?;
    let inputs: Vec<Bits> = Bits::all(program.n_controls).collect();
    let results = inputs
        .par_iter()
        .map(|controls| -> Result<(f64, Vec<f64>)> {
            let bits = program.input_bits(controls)?;
            let state = run_register(program, &schedules, &bits, noise, ForwardModel::Block)?;
            let p1 = state.probability_one(program.target())?.as_f64();
            let pops = (0..program.n_controls)
                .map(|q| state.probability_one(q).map(|p| p.as_f64()))
                .collect::<Result<Vec<_>>>()?;
            Ok((p1, pops))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = BTreeMap::new();
    let mut control_populations = BTreeMap::new();
    for (controls, (p1, pops)) in inputs.into_iter().zip(results) {
        rows.insert(controls.clone(), p1);
        control_populations.insert(controls, pops);
    }
    Ok(TruthTableReport {
        outputs: TruthTable {
            n_controls: program.n_controls,
            rows,
        },
        control_populations,
    })
}

/// Search space and budget for [`optimize_weights`].
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeSettings {
    pub layers: usize,
    pub j_max: AngularFrequency<f64>,
    pub omega_i: AngularFrequency<f64>,
    pub omega_f: AngularFrequency<f64>,
    /// When set, Ω_f of each layer is also searched within these bounds.
    pub omega_f_range: Option<(AngularFrequency<f64>, AngularFrequency<f64>)>,
    pub t_f: f64,
    pub n_segments: usize,
    /// Also search a bias coupling per layer (adds a bias qubit in |1⟩).
    pub include_bias: bool,
    pub starts: usize,
    pub tolerance: f64,
    pub max_evals: usize,
    /// Random candidates ranked by the classical surrogate when seeding.
    pub surrogate_pool: usize,
    pub seed: u64,
}

impl OptimizeSettings {
    pub fn standard(layers: usize) -> Self {
        let j_max = AngularFrequency::from_hz(crate::config::DEFAULT_J_MAX_HZ);
        Self {
            layers,
            j_max,
            omega_i: AngularFrequency::from_hz(crate::config::DEFAULT_OMEGA_I_HZ),
            omega_f: j_max,
            omega_f_range: None,
            t_f: crate::config::DEFAULT_T_F_S,
            n_segments: crate::schedule::DEFAULT_SEGMENTS,
            include_bias: false,
            starts: 16,
            tolerance: 1e-4,
            max_evals: 2000,
            surrogate_pool: 512,
            seed: 0,
        }
    }

    fn per_layer(&self, n_controls: usize) -> usize {
        n_controls + usize::from(self.include_bias) + usize::from(self.omega_f_range.is_some())
    }

    fn validate(&self) -> Result<()> {
        if !(self.j_max.0 > 0.0 && self.j_max.is_finite()) {
            return Err(Error::InvalidConfig("j_max must be positive".into()));
        }
        if self.layers == 0 {
            return Err(Error::InvalidConfig("need at least one layer".into()));
        }
        if self.starts == 0 {
            return Err(Error::InvalidConfig("need at least one start".into()));
        }
        if let Some((lo, hi)) = self.omega_f_range {
            if !(lo.0 >= 0.0 && hi.0 >= lo.0 && hi.0 <= self.omega_i.0) {
                return Err(Error::InvalidConfig("omega_f range must lie in [0, omega_i]".into()));
            }
        }
        Ok(())
    }
}

/// Log of one optimizer start.
#[derive(Clone, Debug, PartialEq)]
pub struct StartReport {
    pub index: usize,
    /// Seed of the stream the initial point was drawn from.
    pub seed: u64,
    pub from_surrogate: bool,
    pub initial: Vec<f64>,
    pub loss: f64,
    pub evals: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOutcome {
    pub program: GateProgram<f64>,
    /// Loss of `program`, recomputed with [`run_network`].
    pub loss: f64,
    pub starts: Vec<StartReport>,
}

struct Parameterization<'a> {
    settings: &'a OptimizeSettings,
    n_controls: usize,
}

impl Parameterization<'_> {
    fn dim(&self) -> usize {
        self.settings.layers * self.settings.per_layer(self.n_controls)
    }

    /// Total distance outside the box [−1, 1] (Ω_f weights: [0, 1]).
    fn excess(&self, p: &[f64]) -> f64 {
        let per = self.settings.per_layer(self.n_controls);
        p.iter()
            .enumerate()
            .map(|(i, &v)| {
                let is_omega = self.settings.omega_f_range.is_some() && i % per == per - 1;
                let (lo, hi) = if is_omega { (0.0, 1.0) } else { (-1.0, 1.0) };
                (lo - v).max(0.0) + (v - hi).max(0.0)
            })
            .sum()
    }

    fn program(&self, p: &[f64]) -> GateProgram<f64> {
        let s = self.settings;
        let per = s.per_layer(self.n_controls);
        let layers = p
            .chunks(per)
            .map(|chunk| {
                let couplings = chunk[..self.n_controls].iter().map(|&a| s.j_max * a).collect();
                let bias = if s.include_bias {
                    s.j_max * chunk[self.n_controls]
                } else {
                    AngularFrequency::zero()
                };
                let omega_f = match s.omega_f_range {
                    Some((lo, hi)) => lo + (hi - lo) * chunk[per - 1],
                    None => s.omega_f,
                };
                Layer {
                    couplings,
                    bias,
                    schedule: FaquadSpec {
                        omega_i: s.omega_i,
                        omega_f,
                        t_f: s.t_f,
                        x_ref: None,
                        n_segments: s.n_segments,
                        generator: crate::schedule::Generator::OdeFaquad,
                        quantization: crate::schedule::Quantization::PhaseBalanced,
                    },
                }
            })
            .collect();
        GateProgram {
            layers,
            n_controls: self.n_controls,
            j_max: s.j_max,
        }
    }
}

fn table_loss(
    program: &GateProgram<f64>,
    schedules: &[PulseSchedule<f64>],
    target: &TruthTable,
    noise: &NoiseModel<f64>,
) -> Result<f64> {
    let mut loss = 0.0;
    for (bits, &want) in &target.rows {
        let got = run_with_schedules(program, schedules, bits, noise, NetworkModel::Reduced)?;
        loss += (got - want).powi(2);
    }
    Ok(loss)
}

/// Classical composition of layer activations: a target left in |1⟩ with
/// probability p comes out of the next layer excited with probability
/// (1 − p)·f + p·(1 − f). Ignores coherence between layers.
fn surrogate_loss(program: &GateProgram<f64>, target: &TruthTable) -> f64 {
    target
        .rows
        .iter()
        .map(|(bits, &want)| {
            let full = program.input_bits(bits).expect("row width checked");
            let mut p = 0.0;
            for (k, layer) in program.layers.iter().enumerate() {
                let x = program.layer_config(k).field(&full);
                let f = activation_of_field(x, layer.schedule.omega_f).unwrap_or(0.5);
                p = (1.0 - p) * f + p * (1.0 - f);
            }
            (p - want).powi(2)
        })
        .sum()
}

/// Multi-start Nelder–Mead over the per-layer coupling scales (and
/// optionally bias and Ω_f), minimizing Σ (P₁ − target)² with the full
/// quantum forward model. Candidates outside the coupling bounds are scored
/// 10 + (distance outside) without being simulated. Half the starts come
/// from the best candidates of a classical surrogate, the rest are uniform
/// random; every start's seed is logged. Ramps are rebuilt per candidate
/// with the same x_ref default as [`GateProgram::layer_schedule`], so the
/// returned program reproduces the optimized loss as-is.
pub fn optimize_weights(
    target: &TruthTable,
    settings: &OptimizeSettings,
    noise: &NoiseModel<f64>,
) -> Result<OptimizeOutcome> {
    target.validate()?;
    settings.validate()?;
    let n_controls = target.n_controls;
    let param = Parameterization {
        settings,
        n_controls,
    };
    let dim = param.dim();
    noise.validate(n_controls + 1 + usize::from(settings.include_bias))?;
    param.program(&vec![0.0; dim]).validate()?;
    let objective = |p: &[f64]| -> f64 {
        let excess = param.excess(p);
        if excess > 0.0 {
            return 10.0 + excess;
        }
        let program = param.program(p);
        program
            .schedules()
            .and_then(|schedules| table_loss(&program, &schedules, target, noise))
            .unwrap_or(f64::INFINITY)
    };

    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        let per = settings.per_layer(n_controls);
        (0..dim)
            .map(|i| {
                if settings.omega_f_range.is_some() && i % per == per - 1 {
                    rng.random::<f64>()
                } else {
                    rng.random::<f64>() * 2.0 - 1.0
                }
            })
            .collect()
    };

    let surrogate_seed = derive_seed(settings.seed, 0);
    let mut pool_rng = stream_rng(settings.seed, 0);
    let mut pool: Vec<(f64, Vec<f64>)> = (0..settings.surrogate_pool)
        .map(|_| {
            let p = draw(&mut pool_rng);
            (surrogate_loss(&param.program(&p), target), p)
        })
        .collect();
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n_surrogate = settings.starts.div_ceil(2).min(pool.len());
    let mut initial: Vec<(u64, bool, Vec<f64>)> = pool
        .into_iter()
        .take(n_surrogate)
        .map(|(_, p)| (surrogate_seed, true, p))
        .collect();
    for i in initial.len()..settings.starts {
        let stream = 1 + i as u64;
        initial.push((
            derive_seed(settings.seed, stream),
            false,
            draw(&mut stream_rng(settings.seed, stream)),
        ));
    }

    let nm = NelderMeadOptions {
        step: 0.2,
        f_tol: settings.tolerance,
        x_tol: 1e-6,
        max_evals: settings.max_evals,
    };
    let runs: Vec<(Vec<f64>, StartReport)> = initial
        .into_par_iter()
        .enumerate()
        .map(|(index, (seed, from_surrogate, x0))| {
            let m = nelder_mead(objective, &x0, nm);
            (
                m.x,
                StartReport {
                    index,
                    seed,
                    from_surrogate,
                    initial: x0,
                    loss: m.value,
                    evals: m.evals,
                },
            )
        })
        .collect();

    let (best_x, _) = runs
        .iter()
        .min_by(|a, b| a.1.loss.total_cmp(&b.1.loss).then(a.1.index.cmp(&b.1.index)))
        .expect("at least one start");
    if param.excess(best_x) > 0.0 {
        return Err(Error::Numerical("no start found a feasible point".into()));
    }
    let program = param.program(best_x);
    let mut loss = 0.0;
    for (bits, &want) in &target.rows {
        loss += (run_network(&program, bits, noise, NetworkModel::Reduced)? - want).powi(2);
    }
    Ok(OptimizeOutcome {
        program,
        loss,
        starts: runs.into_iter().map(|(_, r)| r).collect(),
    })
}

/// Smallest loss over a regular grid of single-layer coupling scales in
/// [−1, 1]ⁿ with `steps` points per axis.
pub fn single_layer_grid_minimum(
    target: &TruthTable,
    settings: &OptimizeSettings,
    noise: &NoiseModel<f64>,
    steps: usize,
) -> Result<(f64, Vec<f64>)> {
    target.validate()?;
    let mut one = settings.clone();
    one.layers = 1;
    one.include_bias = false;
    one.omega_f_range = None;
    one.validate()?;
    let n = target.n_controls;
    let param = Parameterization {
        settings: &one,
        n_controls: n,
    };
    let steps = steps.max(2);
    let total = steps.pow(n as u32);
    let axis = |i: usize| -1.0 + 2.0 * i as f64 / (steps - 1) as f64;
    (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut p = Vec::with_capacity(n);
            for _ in 0..n {
                p.push(axis(idx % steps));
                idx /= steps;
            }
            let program = param.program(&p);
            let l = table_loss(&program, &program.schedules()?, target, noise)?;
            Ok((l, p))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| {
            v.into_iter()
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("grid is non-empty")
        })
}

impl<T: Real> GateProgram<T> {
    /// Same program with controls `a` and `b` exchanged in every layer.
    pub fn swap_controls(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        for layer in &mut out.layers {
            layer.couplings.swap(a, b);
        }
        out
    }

    /// Same program with every coupling negated.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for layer in &mut out.layers {
            for c in &mut layer.couplings {
                *c = -*c;
            }
            layer.bias = -layer.bias;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Bits {
        s.parse().unwrap()
    }

    #[test]
    fn xnor_table_shape() {
        let t = TruthTable::xnor();
        assert_eq!(t.rows[&bits("00")], 1.0);
        assert_eq!(t.rows[&bits("01")], 0.0);
        assert!(TruthTable::new(2, BTreeMap::from([(bits("00"), 1.0)])).is_err());
        assert!(TruthTable::new(1, BTreeMap::from([(bits("0"), 1.0), (bits("1"), 1.5)])).is_err());
    }

    #[test]
    fn single_layer_matches_gate() {
        let mut program = GateProgram::<f64>::xnor_reference();
        program.layers.truncate(1);
        let schedule = program.layer_schedule(0).unwrap();
        let cfg = program.layer_config(0);
        for input in ["00", "01", "10", "11"] {
            let b = program.input_bits(&bits(input)).unwrap();
            let state = make_basis_state(3, &b).unwrap();
            let direct = apply_gate(&state, &cfg, &schedule, &NoiseModel::noiseless())
                .unwrap()
                .probability_one(2)
                .unwrap();
            let net = run_network(&program, &bits(input), &NoiseModel::noiseless(), NetworkModel::Reduced)
                .unwrap();
            assert!((direct - net).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_models_agree() {
        let program = GateProgram::<f64>::xnor_reference();
        for noise in [NoiseModel::noiseless(), NoiseModel::dephasing(20e-3)] {
            for input in ["00", "01", "10", "11"] {
                let r = run_network(&program, &bits(input), &noise, NetworkModel::Reduced).unwrap();
                let f = run_network(
                    &program,
                    &bits(input),
                    &noise,
                    NetworkModel::Register(ForwardModel::Block),
                )
                .unwrap();
                assert!((r - f).abs() < 1e-12, "{input}: {r} vs {f}");
            }
        }
    }

    #[test]
    fn zero_couplings_are_pure_rotations() {
        // at x = 0 every ramp is exp(iAσx/2) with A the pulse area
        let mut program = GateProgram::<f64>::xnor_reference();
        for l in &mut program.layers {
            l.couplings = vec![AngularFrequency::zero(); 2];
        }
        let p = run_network(&program, &bits("01"), &NoiseModel::noiseless(), NetworkModel::Reduced)
            .unwrap();
        let schedule = program.layer_schedule(0).unwrap();
        let area: f64 = schedule.segments.iter().map(|s| s.amplitude.0 * s.duration).sum();
        use num_complex::Complex;
        let c = |re: f64, im: f64| Complex::new(re, im);
        let h = gates::hadamard::<f64>();
        let (s, co) = (0.5 * area).sin_cos();
        let u = [[c(co, 0.0), c(0.0, s)], [c(0.0, s), c(co, 0.0)]];
        let mul = |a: &[[Complex<f64>; 2]; 2], v: [Complex<f64>; 2]| {
            [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
        };
        let mut v = [c(1.0, 0.0), c(0.0, 0.0)];
        for _ in 0..2 {
            v = mul(&u, mul(&h, v));
        }
        assert!((p - v[1].norm_sqr()).abs() < 1e-9);
        // second H undoes the first, so the net result is sin²(A/2)
        assert!((p - s * s).abs() < 1e-9);
    }

    #[test]
    fn permutation_equivariance() {
        let program = GateProgram::<f64>::xnor_reference();
        let swapped = program.swap_controls(0, 1);
        let noise = NoiseModel::noiseless();
        for input in ["00", "01", "10", "11"] {
            let b = bits(input);
            let mut rev = b.clone();
            rev.set(0, b.get(1));
            rev.set(1, b.get(0));
            let a = run_network(&program, &b, &noise, NetworkModel::Reduced).unwrap();
            let c = run_network(&swapped, &rev, &noise, NetworkModel::Reduced).unwrap();
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn global_flip_invariance() {
        let program = GateProgram::<f64>::xnor_reference();
        let flipped = program.negated();
        let noise = NoiseModel::dephasing(20e-3);
        for input in ["00", "01", "10", "11"] {
            let b = bits(input);
            let a = run_network(&program, &b, &noise, NetworkModel::Reduced).unwrap();
            let c = run_network(&flipped, &b.flipped(), &noise, NetworkModel::Reduced).unwrap();
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_contracts_toward_half() {
        let program = GateProgram::<f64>::xnor_reference();
        let clean = evaluate_truth_table(&program, &NoiseModel::noiseless()).unwrap();
        let noisy = evaluate_truth_table(&program, &NoiseModel::dephasing(20e-3)).unwrap();
        for (b, &p) in &clean.outputs.rows {
            let q = noisy.outputs.rows[b];
            assert!((q - 0.5).abs() <= (p - 0.5).abs(), "{b}: {p} -> {q}");
        }
    }

    #[test]
    fn controls_keep_their_values() {
        let program = GateProgram::<f64>::xnor_reference();
        let report = evaluate_truth_table(&program, &NoiseModel::noiseless()).unwrap();
        for (b, pops) in &report.control_populations {
            for (q, &p) in pops.iter().enumerate() {
                let want = if b.get(q) { 1.0 } else { 0.0 };
                assert!((p - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn identity_table_one_layer() {
        let target = TruthTable::from_fn(1, |b| if b.get(0) { 1.0 } else { 0.0 }).unwrap();
        let mut settings = OptimizeSettings::standard(1);
        settings.starts = 4;
        settings.n_segments = 300;
        let out = optimize_weights(&target, &settings, &NoiseModel::noiseless()).unwrap();
        // a single sigmoid at |x| ≤ Ω_f only reaches f(1) ≈ 0.854, so let Ω_f
        // fall to reach the classical limit
        assert!(out.program.layers[0].couplings[0].0 > 0.0);
        settings.omega_f_range = Some((AngularFrequency::zero(), AngularFrequency::from_hz(37.5)));
        settings.t_f = 0.1;
        let out = optimize_weights(&target, &settings, &NoiseModel::noiseless()).unwrap();
        assert!(out.loss < 1e-3, "loss {}", out.loss);
        assert!(out.program.layers[0].couplings[0].0 > 0.0);
    }

    #[test]
    fn optimizer_deterministic_and_sound() {
        let target = TruthTable::xnor();
        let mut settings = OptimizeSettings::standard(2);
        settings.starts = 3;
        settings.max_evals = 150;
        settings.n_segments = 200;
        let a = optimize_weights(&target, &settings, &NoiseModel::noiseless()).unwrap();
        let b = optimize_weights(&target, &settings, &NoiseModel::noiseless()).unwrap();
        assert_eq!(a, b);
        let achieved = evaluate_truth_table(&a.program, &NoiseModel::noiseless()).unwrap();
        assert!((target.loss(&achieved.outputs) - a.loss).abs() < 1e-9);
    }

    #[test]
    fn single_layer_cannot_learn_xnor() {
        let mut settings = OptimizeSettings::standard(1);
        settings.n_segments = 300;
        let (loss, _) =
            single_layer_grid_minimum(&TruthTable::xnor(), &settings, &NoiseModel::noiseless(), 11)
                .unwrap();
        assert!(loss >= 0.25, "{loss}");
    }
}
