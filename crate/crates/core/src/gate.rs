//! The perceptron gate as an experiment: Hadamard on the target, sudden
//! switch-on of the dressing field, ramp-down, readout. Also the Ramsey
//! sequence used to calibrate a coupling.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde_json::{json, Map};

use crate::config::{NoiseModel, SpinChainConfig};
use crate::error::{Error, Result};
use crate::evolve::propagate_piecewise;
use crate::hamiltonian::activation_of_field;
use crate::record::{ExperimentRecord, RecordRow};
use crate::scalar::{from_usize, lit, Real};
use crate::schedule::{build_schedule, FaquadSpec, PulseSchedule};
use crate::seeding::stream_rng;
use crate::state::{gates, make_basis_state, Bits, RegisterState};
use crate::units::AngularFrequency;

/// Ω_i must exceed the largest possible field by this factor, so the dressed
/// ground state at switch-on is |+⟩ to within ~1e-4 in population.
pub const DRESSING_MARGIN: f64 = 100.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PerceptronGateSpec<T> {
    pub config: SpinChainConfig<T>,
    pub schedule: FaquadSpec<T>,
    pub noise: NoiseModel<T>,
}

impl<T: Real> PerceptronGateSpec<T> {
    /// Control–target–bias chain at J = Θ = 2π×37.5 Hz with the standard
    /// 15 ms FAQUAD ramp from 2π×28 kHz down to Ω_f = J, noiseless.
    pub fn standard() -> Self {
        let config = SpinChainConfig::three_ion();
        let schedule = FaquadSpec::standard(config.j_max);
        Self {
            config,
            schedule,
            noise: NoiseModel::noiseless(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.noise.validate(self.config.n_qubits)?;
        self.schedule.validate()?;
        check_dressing(self.schedule.omega_i, &self.config)
    }

    /// Reference field for the ramp when none is given: the largest field
    /// the register can produce, or j_max if every coupling is zero.
    pub fn default_x_ref(&self) -> AngularFrequency<T> {
        worst_case_field(std::iter::once(&self.config))
    }

    pub fn build_schedule(&self) -> Result<PulseSchedule<T>> {
        build_schedule(&self.schedule.resolved(self.default_x_ref()))
    }
}

pub(crate) fn worst_case_field<'a, T: Real>(
    configs: impl Iterator<Item = &'a SpinChainConfig<T>>,
) -> AngularFrequency<T> {
    let mut j_max = AngularFrequency::<T>::zero();
    let mut bound = AngularFrequency::<T>::zero();
    for c in configs {
        j_max = AngularFrequency(j_max.0.max(c.j_max.0));
        bound = AngularFrequency(bound.0.max(c.field_bound().0));
    }
    if bound.0 > T::zero() {
        bound
    } else {
        j_max
    }
}

fn check_dressing<T: Real>(omega_i: AngularFrequency<T>, config: &SpinChainConfig<T>) -> Result<()> {
    let needed = config.field_bound() * lit::<T>(DRESSING_MARGIN);
    if omega_i.0 < needed.0 {
        return Err(Error::InvalidConfig(format!(
            "omega_i {omega_i} is below {DRESSING_MARGIN}× the largest field ({needed})"
        )));
    }
    Ok(())
}

/// Hadamard on the target, then the ramp-down built from `spec.schedule`.
pub fn run_perceptron_gate<T: Real>(
    input: &RegisterState<T>,
    spec: &PerceptronGateSpec<T>,
) -> Result<RegisterState<T>> {
    spec.validate()?;
    let schedule = spec.build_schedule()?;
    apply_gate(input, &spec.config, &schedule, &spec.noise)
}

/// Gate with an explicit, already discretized ramp.
pub fn apply_gate<T: Real>(
    input: &RegisterState<T>,
    config: &SpinChainConfig<T>,
    schedule: &PulseSchedule<T>,
    noise: &NoiseModel<T>,
) -> Result<RegisterState<T>> {
    let first = schedule
        .segments
        .first()
        .ok_or_else(|| Error::InvalidSchedule("schedule has no segments".into()))?;
    check_dressing(first.amplitude, config)?;
    let mut state = input.clone();
    state.apply_single_qubit(config.target, &gates::hadamard())?;
    propagate_piecewise(&state, config, schedule, noise)
}

/// One point of an activation sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint<T> {
    pub series: String,
    /// Scale α of the first control's coupling.
    pub alpha: T,
    /// Bias coupling as a multiple of the template's Θ.
    pub theta_scale: T,
    pub control_bit: bool,
    pub bias_bit: bool,
}

/// α on an even grid over [−1, 1], control in |1⟩ and |0⟩, for each
/// `(series, theta_scale)`. The bias qubit sits in |1⟩.
pub fn alpha_sweep<T: Real>(n_alpha: usize, series: &[(&str, T)]) -> Vec<SweepPoint<T>> {
    let mut points = Vec::new();
    for &(name, theta_scale) in series {
        for control_bit in [true, false] {
            for k in 0..n_alpha {
                let alpha = if n_alpha == 1 {
                    T::zero()
                } else {
                    -T::one() + lit::<T>(2.0) * from_usize::<T>(k) / from_usize(n_alpha - 1)
                };
                points.push(SweepPoint {
                    series: name.to_string(),
                    alpha,
                    theta_scale,
                    control_bit,
                    bias_bit: true,
                });
            }
        }
    }
    points
}

/// Three series: Θ = 0 and Θ = ±Θ_max.
pub fn standard_sweep<T: Real>(n_alpha: usize) -> Vec<SweepPoint<T>> {
    alpha_sweep(
        n_alpha,
        &[("theta=0", T::zero()), ("theta=+max", T::one()), ("theta=-max", -T::one())],
    )
}

/// Control and bias couplings scanned together with both qubits in the same
/// state, which doubles the reachable field range.
pub fn concurrent_sweep<T: Real>(n_alpha: usize) -> Vec<SweepPoint<T>> {
    alpha_sweep::<T>(n_alpha, &[("control+bias", T::zero())])
        .into_iter()
        .map(|mut p| {
            p.theta_scale = p.alpha;
            p.bias_bit = p.control_bit;
            p
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Binomial readout with this many shots per point.
    pub shots: Option<u64>,
    pub seed: u64,
    pub analytic_only: bool,
}

fn point_config<T: Real>(template: &SpinChainConfig<T>, p: &SweepPoint<T>) -> Result<SpinChainConfig<T>> {
    let mut cfg = template.clone();
    let control = cfg
        .controls()
        .next()
        .ok_or_else(|| Error::InvalidConfig("sweep needs at least one control".into()))?;
    cfg.set_scale(control, p.alpha);
    if cfg.bias.is_some() {
        cfg.bias_strength = template.bias_strength * p.theta_scale;
    } else if p.theta_scale != T::zero() {
        return Err(Error::InvalidConfig("bias scan on a register without a bias qubit".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn point_input<T: Real>(cfg: &SpinChainConfig<T>, p: &SweepPoint<T>) -> Bits {
    let mut bits = Bits::zeros(cfg.n_qubits);
    if let Some(control) = cfg.controls().next() {
        bits.set(control, p.control_bit);
    }
    if let Some(b) = cfg.bias {
        bits.set(b, p.bias_bit);
    }
    bits
}

/// Runs every sweep point through one shared ramp and tabulates the target
/// excitation against the analytic activation at Ω_f.
///
/// The ramp's reference field, unless set in the template, is the worst-case
/// field over the whole sweep.
pub fn sweep_activation<T: Real>(
    template: &PerceptronGateSpec<T>,
    points: &[SweepPoint<T>],
    options: SweepOptions,
) -> Result<ExperimentRecord> {
    template.config.validate()?;
    template.noise.validate(template.config.n_qubits)?;
    let configs: Vec<SpinChainConfig<T>> = points
        .iter()
        .map(|p| point_config(&template.config, p))
        .collect::<Result<_>>()?;
    for cfg in &configs {
        check_dressing(template.schedule.omega_i, cfg)?;
    }
    let spec = template.schedule.resolved(worst_case_field(configs.iter()));
    let schedule = build_schedule(&spec)?;
    let omega_f = schedule.omega_f;
    let target = template.config.target;
    let j_control = template
        .config
        .controls()
        .next()
        .map(|c| template.config.couplings[&c])
        .unwrap_or_else(AngularFrequency::zero);

    let rows = points
        .par_iter()
        .zip(configs.par_iter())
        .enumerate()
        .map(|(k, (p, cfg))| -> Result<RecordRow> {
            let bits = point_input(cfg, p);
            let x = cfg.field(&bits) - cfg.detuning(target);
            let analytic = activation_of_field(x, omega_f)?;
            let (simulated, stderr) = if options.analytic_only {
                (None, None)
            } else {
                let input = make_basis_state(cfg.n_qubits, &bits)?;
                let out = apply_gate(&input, cfg, &schedule, &template.noise)?;
                let p1 = out.probability_one(target)?.as_f64();
                match options.shots {
                    Some(shots) => {
                        let (est, err) = sample_shots(p1, shots, options.seed, k as u64)?;
                        (Some(est), Some(err))
                    }
                    None => (Some(p1), None),
                }
            };
            let z_c = if p.control_bit { 1.0 } else { -1.0 };
            Ok(RecordRow {
                series: p.series.clone(),
                params: vec![
                    p.alpha.as_f64(),
                    p.theta_scale.as_f64(),
                    f64::from(u8::from(p.control_bit)),
                    f64::from(u8::from(p.bias_bit)),
                    (j_control * p.alpha * lit::<T>(z_c) / omega_f).as_f64(),
                    (x / omega_f).as_f64(),
                ],
                p1_simulated: simulated,
                p1_analytic: analytic.as_f64(),
                p1_stderr: stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut record = ExperimentRecord::new(&[
        "alpha",
        "theta_scale",
        "control_bit",
        "bias_bit",
        "u_control",
        "x_over_omega_f",
    ]);
    record.rows = rows;
    record.metadata = schedule_metadata(&spec, &schedule);
    record
        .metadata
        .insert("analytic_only".into(), json!(options.analytic_only));
    record.metadata.insert("shots".into(), json!(options.shots));
    record.metadata.insert("seed".into(), json!(options.seed));
    if !options.analytic_only {
        let (rms, max) = deviation(&record);
        record.metadata.insert("rms_deviation".into(), json!(rms));
        record.metadata.insert("max_deviation".into(), json!(max));
    }
    Ok(record)
}

fn schedule_metadata<T: Real>(spec: &FaquadSpec<T>, schedule: &PulseSchedule<T>) -> Map<String, serde_json::Value> {
    let mut m = Map::new();
    m.insert("generator".into(), json!(schedule.generator));
    m.insert("quantization".into(), json!(spec.quantization.tag()));
    m.insert("omega_i_hz".into(), json!(schedule.omega_i.hz().as_f64()));
    m.insert("omega_f_hz".into(), json!(schedule.omega_f.hz().as_f64()));
    m.insert("t_f_s".into(), json!(schedule.t_f.as_f64()));
    m.insert("n_segments".into(), json!(schedule.len()));
    m.insert(
        "x_ref_hz".into(),
        json!(spec.x_ref.map(|x| x.hz().as_f64())),
    );
    m
}

/// RMS and maximum of |p1_simulated − p1_analytic| over simulated rows.
pub fn deviation(record: &ExperimentRecord) -> (f64, f64) {
    let d: Vec<f64> = record
        .rows
        .iter()
        .filter_map(|r| r.p1_simulated.map(|p| (p - r.p1_analytic).abs()))
        .collect();
    if d.is_empty() {
        return (0.0, 0.0);
    }
    let rms = (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt();
    (rms, d.iter().copied().fold(0.0, f64::max))
}

fn sample_shots(p: f64, shots: u64, seed: u64, stream: u64) -> Result<(f64, f64)> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be at least 1".into()));
    }
    let dist = Binomial::new(shots, p.clamp(0.0, 1.0))
        .map_err(|e| Error::Numerical(format!("binomial readout: {e}")))?;
    let k = dist.sample(&mut stream_rng(seed, stream));
    let est = k as f64 / shots as f64;
    // keep a nonzero error bar at the boundaries
    let q = est.clamp(0.5 / shots as f64, 1.0 - 0.5 / shots as f64);
    Ok((est, (q * (1.0 - q) / shots as f64).sqrt()))
}

/// Horizontal offset δ that best maps `points` (u, P) onto
/// `reference(u + δ)` in the least-squares sense.
pub fn fit_sigmoid_shift(reference: impl Fn(f64) -> f64, points: &[(f64, f64)]) -> f64 {
    let loss = |d: f64| {
        points
            .iter()
            .map(|&(u, p)| (p - reference(u + d)).powi(2))
            .sum::<f64>()
    };
    let step = 1e-2;
    let mut best = 0.0;
    let mut best_loss = f64::INFINITY;
    for k in -500..=500 {
        let d = k as f64 * step;
        let l = loss(d);
        if l < best_loss {
            best = d;
            best_loss = l;
        }
    }
    // golden-section refinement inside the winning bracket
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best - step, best + step);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if loss(c) < loss(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Least-squares fit of P(φ) = offset + amplitude·cos(φ − phase).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeFit<T> {
    pub offset: T,
    pub amplitude: T,
    pub phase: T,
    pub phase_stderr: T,
}

pub fn fit_fringe<T: Real>(phases: &[T], p1: &[T]) -> Result<FringeFit<T>> {
    if phases.len() != p1.len() {
        return Err(Error::DimensionMismatch {
            expected: phases.len(),
            found: p1.len(),
        });
    }
    let n = phases.len();
    if n < 4 {
        return Err(Error::FitFailed("need at least 4 phase points".into()));
    }
    // normal equations for [1, cos φ, sin φ]
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for (&phi, &p) in phases.iter().zip(p1) {
        let (s, c) = phi.as_f64().sin_cos();
        let row = [1.0, c, s];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            aty[i] += row[i] * p.as_f64();
        }
    }
    let inv = invert3(&ata).ok_or_else(|| Error::FitFailed("phase grid is degenerate".into()))?;
    let beta: Vec<f64> = (0..3)
        .map(|i| (0..3).map(|j| inv[i][j] * aty[j]).sum())
        .collect();
    let (c0, a, b) = (beta[0], beta[1], beta[2]);
    let rss: f64 = phases
        .iter()
        .zip(p1)
        .map(|(&phi, &p)| {
            let (s, c) = phi.as_f64().sin_cos();
            (p.as_f64() - c0 - a * c - b * s).powi(2)
        })
        .sum();
    let sigma2 = rss / (n - 3) as f64;
    let r2 = a * a + b * b;
    let amplitude = r2.sqrt();
    let amp_var = sigma2 * (a * a * inv[1][1] + 2.0 * a * b * inv[1][2] + b * b * inv[2][2]) / r2.max(f64::MIN_POSITIVE);
    if amplitude < 1e-9 || amplitude * amplitude < 4.0 * amp_var {
        return Err(Error::FitFailed(format!(
            "flat fringe (amplitude {amplitude:.3e})"
        )));
    }
    // delta method: ∂φ/∂a = −b/r², ∂φ/∂b = a/r²
    let (ga, gb) = (-b / r2, a / r2);
    let phase_var = sigma2 * (ga * ga * inv[1][1] + 2.0 * ga * gb * inv[1][2] + gb * gb * inv[2][2]);
    Ok(FringeFit {
        offset: lit(c0),
        amplitude: lit(amplitude),
        phase: lit(b.atan2(a)),
        phase_stderr: lit(phase_var.max(0.0).sqrt()),
    })
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale = m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    if det.abs() <= 1e-12 * scale.powi(3) {
        return None;
    }
    let cofactor = |i: usize, j: usize| {
        let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
        let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
        (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det
    };
    Some(std::array::from_fn(|i| std::array::from_fn(|j| cofactor(i, j))))
}

/// Evenly spaced probe phases covering one full period.
pub fn default_phase_grid<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|k| T::TAU() * from_usize::<T>(k) / from_usize(n))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RamseyOptions<T> {
    /// Control whose coupling is measured; the first control by default.
    pub control: Option<usize>,
    pub noise: NoiseModel<T>,
    pub shots: Option<u64>,
    pub seed: u64,
}

impl<T: Real> Default for RamseyOptions<T> {
    fn default() -> Self {
        Self {
            control: None,
            noise: NoiseModel::noiseless(),
            shots: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RamseyResult<T> {
    /// Δφ / (2T).
    pub coupling: AngularFrequency<T>,
    pub coupling_stderr: AngularFrequency<T>,
    /// Fringe phase difference between control |1⟩ and |0⟩, in (−π, π].
    pub delta_phi: T,
    pub time: T,
    pub phases: Vec<T>,
    /// Target P₁ per phase with the control in |0⟩ and in |1⟩.
    pub p1: [Vec<T>; 2],
    pub fits: [FringeFit<T>; 2],
}

/// Ramsey sequence on the target: π/2 pulse, free evolution under the Ising
/// couplings for `time`, π/2 probe pulse with each phase in `phases`. The
/// fringe shifts by 2JT between the two control states.
pub fn measure_coupling_ramsey<T: Real>(
    config: &SpinChainConfig<T>,
    time: T,
    phases: &[T],
    options: &RamseyOptions<T>,
) -> Result<RamseyResult<T>> {
    config.validate()?;
    options.noise.validate(config.n_qubits)?;
    if !(time.is_finite() && time > T::zero()) {
        return Err(Error::InvalidConfig(format!("evolution time {time} must be positive")));
    }
    let n = phases.len();
    if n < 4 {
        return Err(Error::InvalidConfig("phase grid needs at least 4 points".into()));
    }
    let lo = phases.iter().copied().fold(T::infinity(), T::min);
    let hi = phases.iter().copied().fold(T::neg_infinity(), T::max);
    // an evenly spaced grid of n points spans (n−1)/n of the period it samples
    if (hi - lo) * from_usize::<T>(n) / from_usize::<T>(n - 1) < T::TAU() * (T::one() - lit(1e-9)) {
        return Err(Error::InvalidConfig("phase grid must cover a full 2π period".into()));
    }
    let control = match options.control {
        Some(c) if config.couplings.contains_key(&c) => c,
        Some(c) => return Err(Error::InvalidConfig(format!("qubit {c} is not a control"))),
        None => config
            .controls()
            .next()
            .ok_or_else(|| Error::InvalidConfig("Ramsey needs a control qubit".into()))?,
    };
    let free = PulseSchedule::constant(AngularFrequency::zero(), time, 1);
    let half_pi = T::FRAC_PI_2();

    let mut curves: [Vec<T>; 2] = [Vec::new(), Vec::new()];
    for (slot, curve) in curves.iter_mut().enumerate() {
        let mut bits = Bits::zeros(config.n_qubits);
        bits.set(control, slot == 1);
        if let Some(b) = config.bias {
            bits.set(b, true);
        }
        let mut state = make_basis_state(config.n_qubits, &bits)?;
        state.apply_single_qubit(config.target, &gates::rotation(half_pi, T::zero()))?;
        let evolved = propagate_piecewise(&state, config, &free, &options.noise)?;
        *curve = phases
            .par_iter()
            .enumerate()
            .map(|(k, &phi)| -> Result<T> {
                let mut probe = evolved.clone();
                probe.apply_single_qubit(config.target, &gates::rotation(half_pi, phi))?;
                let p = probe.probability_one(config.target)?;
                Ok(match options.shots {
                    Some(shots) => lit(
                        sample_shots(p.as_f64(), shots, options.seed, (slot * n + k) as u64)?.0,
                    ),
                    None => p,
                })
            })
            .collect::<Result<Vec<T>>>()?;
    }
    let fits = [fit_fringe(phases, &curves[0])?, fit_fringe(phases, &curves[1])?];
    let mut delta_phi = fits[1].phase - fits[0].phase;
    while delta_phi > T::PI() {
        delta_phi -= T::TAU();
    }
    while delta_phi <= -T::PI() {
        delta_phi += T::TAU();
    }
    let two_t = lit::<T>(2.0) * time;
    let phase_err = fits[0].phase_stderr.hypot(fits[1].phase_stderr);
    Ok(RamseyResult {
        coupling: AngularFrequency(delta_phi / two_t),
        coupling_stderr: AngularFrequency(phase_err / two_t),
        delta_phi,
        time,
        phases: phases.to_vec(),
        p1: curves,
        fits,
    })
}

/// |⟨ψ|φ⟩|²-style fidelity of the control and bias qubits with their input
/// basis configuration, i.e. the probability of still reading those bits.
pub fn spectator_fidelity<T: Real>(
    state: &RegisterState<T>,
    config: &SpinChainConfig<T>,
    input: &Bits,
) -> Result<T> {
    let qubits: Vec<usize> = (0..config.n_qubits).filter(|&q| q != config.target).collect();
    let bits: Vec<bool> = qubits.iter().map(|&q| input.get(q)).collect();
    state.probability_of(&qubits, &bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::activation;

    fn hz(v: f64) -> AngularFrequency<f64> {
        AngularFrequency::from_hz(v)
    }

    fn basis(bits: &str) -> RegisterState<f64> {
        let b: Bits = bits.parse().unwrap();
        make_basis_state(b.len(), &b).unwrap()
    }

    #[test]
    fn dressing_invariant_enforced() {
        let mut spec = PerceptronGateSpec::<f64>::standard();
        spec.schedule.omega_i = hz(5000.0);
        assert!(run_perceptron_gate(&basis("001"), &spec).is_err());
    }

    #[test]
    fn zero_field_stays_balanced() {
        let mut spec = PerceptronGateSpec::<f64>::standard();
        spec.config.set_scale(0, 0.0);
        spec.config.bias_strength = AngularFrequency::zero();
        let out = run_perceptron_gate(&basis("101"), &spec).unwrap();
        assert!((out.probability_one(1).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn negative_field_tracks_activation() {
        // control |0>, bias |0>: x = −2J, with a slow ramp
        let mut spec = PerceptronGateSpec::<f64>::standard();
        spec.schedule.t_f = 60e-3;
        let out = run_perceptron_gate(&basis("000"), &spec).unwrap();
        let want = activation(-2.0);
        assert!((out.probability_one(1).unwrap() - want).abs() < 0.01);
        assert!(want < 0.06);
    }

    #[test]
    fn controls_undisturbed() {
        let spec = PerceptronGateSpec::<f64>::standard();
        for bits in ["000", "001", "100", "101"] {
            let input: Bits = bits.parse().unwrap();
            let out = run_perceptron_gate(&basis(bits), &spec).unwrap();
            let f = spectator_fidelity(&out, &spec.config, &input).unwrap();
            assert!(f >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn classical_limit() {
        let mut spec = PerceptronGateSpec::<f64>::standard();
        spec.schedule.omega_f = AngularFrequency::zero();
        spec.schedule.t_f = 0.3;
        for (bits, want) in [("101", 1.0), ("000", 0.0)] {
            let out = run_perceptron_gate(&basis(bits), &spec).unwrap();
            assert!((out.probability_one(1).unwrap() - want).abs() < 1e-3, "{bits}");
        }
    }

    #[test]
    fn theta_zero_sweep_is_antisymmetric() {
        let spec = PerceptronGateSpec::<f64>::standard();
        let points = alpha_sweep(11, &[("theta=0", 0.0)]);
        let rec = sweep_activation(&spec, &points, SweepOptions::default()).unwrap();
        let n = rec.rows.len() / 2;
        for k in 0..n {
            // control |1> at α pairs with control |0> at α: x → −x
            let a = rec.rows[k].p1_simulated.unwrap();
            let b = rec.rows[n + k].p1_simulated.unwrap();
            assert!((a + b - 1.0).abs() < 0.02);
        }
        let mid = &rec.rows[n / 2];
        assert!((mid.p1_simulated.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn analytic_only_skips_simulation() {
        let spec = PerceptronGateSpec::<f64>::standard();
        let rec = sweep_activation(
            &spec,
            &standard_sweep(5),
            SweepOptions {
                analytic_only: true,
                ..SweepOptions::default()
            },
        )
        .unwrap();
        assert_eq!(rec.rows.len(), 30);
        assert!(rec.rows.iter().all(|r| r.p1_simulated.is_none()));
    }

    #[test]
    fn concurrent_scan_doubles_range() {
        let spec = PerceptronGateSpec::<f64>::standard();
        let rec = sweep_activation(
            &spec,
            &concurrent_sweep(5),
            SweepOptions {
                analytic_only: true,
                ..SweepOptions::default()
            },
        )
        .unwrap();
        let span = rec
            .rows
            .iter()
            .map(|r| rec.param(r, "x_over_omega_f").unwrap().abs())
            .fold(0.0, f64::max);
        assert!((span - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shots_are_seeded() {
        let spec = PerceptronGateSpec::<f64>::standard();
        let opts = SweepOptions {
            shots: Some(200),
            seed: 5,
            analytic_only: false,
        };
        let pts = alpha_sweep(3, &[("theta=0", 0.0)]);
        let a = sweep_activation(&spec, &pts, opts).unwrap();
        let b = sweep_activation(&spec, &pts, opts).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.iter().all(|r| r.p1_stderr.unwrap() > 0.0));
    }

    #[test]
    fn shift_fit_recovers_offset() {
        let pts: Vec<(f64, f64)> = (0..21)
            .map(|k| {
                let u = -1.0 + 0.1 * k as f64;
                (u, activation(u + 0.7))
            })
            .collect();
        assert!((fit_sigmoid_shift(activation, &pts) - 0.7).abs() < 1e-8);
    }

    #[test]
    fn fringe_fit_exact() {
        let phases = default_phase_grid::<f64>(16);
        let p: Vec<f64> = phases.iter().map(|&f| 0.5 + 0.4 * (f - 1.2).cos()).collect();
        let fit = fit_fringe(&phases, &p).unwrap();
        assert!((fit.phase - 1.2).abs() < 1e-12);
        assert!((fit.amplitude - 0.4).abs() < 1e-12);
        assert!((fit.offset - 0.5).abs() < 1e-12);
        assert!(fit_fringe(&phases, &[0.5; 16]).is_err());
    }

    #[test]
    fn ramsey_recovers_coupling() {
        let cfg = SpinChainConfig::<f64>::three_ion();
        let r = measure_coupling_ramsey(&cfg, 5e-3, &default_phase_grid(24), &RamseyOptions::default())
            .unwrap();
        assert!((r.coupling.0 - cfg.j_max.0).abs() < 1e-3 * cfg.j_max.0);
        assert!((r.delta_phi - 2.0 * cfg.j_max.0 * 5e-3).abs() < 1e-9);
    }

    #[test]
    fn ramsey_zero_coupling() {
        let mut cfg = SpinChainConfig::<f64>::three_ion();
        cfg.set_scale(0, 0.0);
        let r = measure_coupling_ramsey(&cfg, 5e-3, &default_phase_grid(24), &RamseyOptions::default())
            .unwrap();
        assert!(r.coupling.0.abs() < 1e-9);
    }

    #[test]
    fn ramsey_contrast_decays() {
        let cfg = SpinChainConfig::<f64>::three_ion();
        let opts = RamseyOptions {
            noise: NoiseModel::dephasing(20e-3),
            ..RamseyOptions::default()
        };
        let r = measure_coupling_ramsey(&cfg, 5e-3, &default_phase_grid(24), &opts).unwrap();
        for fit in &r.fits {
            assert!((fit.amplitude - 0.5 * (-0.25f64).exp()).abs() < 1e-9);
        }
        assert!((r.coupling.0 - cfg.j_max.0).abs() < 1e-9 * cfg.j_max.0);
    }

    #[test]
    fn ramsey_rejects_short_grid() {
        let cfg = SpinChainConfig::<f64>::three_ion();
        let grid: Vec<f64> = (0..8).map(|k| k as f64 * 0.3).collect();
        assert!(measure_coupling_ramsey(&cfg, 5e-3, &grid, &RamseyOptions::default()).is_err());
    }
}
