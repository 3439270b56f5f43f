//! Ramp-down schedules for the dressing field and their square-pulse
//! discretization.
//!
//! The FAQUAD ramp holds the adiabaticity parameter
//! `c = |θ̇| / (2√(Ω² + x²))`, `θ = arctan(Ω/x)`, constant in time. Since
//! `c = |u̇| / (2x)` with `u = Ω/√(Ω² + x²) = sin θ`, the solution is the ramp
//! along which `u` moves linearly in time between its endpoint values.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};
use crate::units::AngularFrequency;

/// Default number of square pulses per ramp.
pub const DEFAULT_SEGMENTS: usize = 1000;

const BISECTION_STEPS: usize = 200;

/// Which continuous ramp a schedule is sampled from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Constant-adiabaticity FAQUAD solution for a reference field.
    #[default]
    OdeFaquad,
    /// Rational closed form in the golden ratio, exact only at Ω_i.
    ClosedForm,
    Linear,
}

impl Generator {
    pub fn tag(self) -> &'static str {
        match self {
            Self::OdeFaquad => "ode_faquad",
            Self::ClosedForm => "closed_form",
            Self::Linear => "linear",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "ode_faquad" => Some(Self::OdeFaquad),
            "closed_form" => Some(Self::ClosedForm),
            "linear" => Some(Self::Linear),
            _ => None,
        }
    }
}

/// How a continuous ramp is cut into square pulses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantization {
    /// Sample nodes spread evenly in a mix of the mixing variable
    /// `u = Ω/√(Ω²+x²)` and the accumulated dynamical phase `∫√(Ω²+x²) dt`,
    /// so no pulse carries a large jump in eigenbasis or in phase. Each pulse
    /// holds the curve value at its node and extends halfway to its
    /// neighbours.
    #[default]
    PhaseBalanced,
    /// Equal amplitude steps between consecutive pulses; pulse boundaries
    /// sit at equally spaced amplitude levels along the curve.
    UniformAmplitude,
}

impl Quantization {
    pub fn tag(self) -> &'static str {
        match self {
            Self::PhaseBalanced => "phase_balanced",
            Self::UniformAmplitude => "uniform_amplitude",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "phase_balanced" => Some(Self::PhaseBalanced),
            "uniform_amplitude" => Some(Self::UniformAmplitude),
            _ => None,
        }
    }
}

/// Parameters of one ramp-down.
#[derive(Clone, Debug, PartialEq)]
pub struct FaquadSpec<T> {
    pub omega_i: AngularFrequency<T>,
    pub omega_f: AngularFrequency<T>,
    /// Ramp duration in seconds.
    pub t_f: T,
    /// Reference field the ramp is designed for. `None` defers to the
    /// register's worst-case field at gate time.
    pub x_ref: Option<AngularFrequency<T>>,
    pub n_segments: usize,
    pub generator: Generator,
    pub quantization: Quantization,
}

impl<T: Real> FaquadSpec<T> {
    /// FAQUAD ramp from 2π×28 kHz over 15 ms to the given final amplitude.
    pub fn standard(omega_f: AngularFrequency<T>) -> Self {
        Self {
            omega_i: AngularFrequency::from_hz(lit(crate::config::DEFAULT_OMEGA_I_HZ)),
            omega_f,
            t_f: lit(crate::config::DEFAULT_T_F_S),
            x_ref: None,
            n_segments: DEFAULT_SEGMENTS,
            generator: Generator::OdeFaquad,
            quantization: Quantization::PhaseBalanced,
        }
    }

    pub fn with_x_ref(mut self, x_ref: AngularFrequency<T>) -> Self {
        self.x_ref = Some(x_ref);
        self
    }

    /// Fills in `x_ref` when unset.
    pub fn resolved(&self, default_x_ref: AngularFrequency<T>) -> Self {
        let mut out = self.clone();
        if out.x_ref.is_none() {
            out.x_ref = Some(default_x_ref);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if !(self.omega_i.is_finite() && self.omega_f.is_finite()) {
            return bad("drive amplitudes must be finite".into());
        }
        if self.omega_f.0 < T::zero() {
            return bad(format!("omega_f {} is negative", self.omega_f));
        }
        if self.omega_i.0 < self.omega_f.0 {
            return bad(format!(
                "omega_i {} is below omega_f {}",
                self.omega_i, self.omega_f
            ));
        }
        if !(self.t_f.is_finite() && self.t_f > T::zero()) {
            return bad(format!("t_f {} must be positive", self.t_f));
        }
        if self.n_segments < 2 {
            return bad(format!("need at least 2 segments, got {}", self.n_segments));
        }
        if let Some(x) = self.x_ref {
            if !(x.is_finite() && x.0 >= T::zero()) {
                return bad(format!("x_ref {x} must be non-negative"));
            }
        }
        Ok(())
    }

    fn x_ref_value(&self) -> Result<T> {
        self.x_ref
            .map(|x| x.0)
            .ok_or_else(|| Error::InvalidSchedule("x_ref is unresolved".into()))
    }
}

/// One square pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<T> {
    pub duration: T,
    pub amplitude: AngularFrequency<T>,
    /// Time at which the continuous ramp was sampled for this pulse.
    pub sample_time: T,
}

/// Piecewise-constant drive amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule<T> {
    pub segments: Vec<Segment<T>>,
    pub t_f: T,
    pub omega_i: AngularFrequency<T>,
    pub omega_f: AngularFrequency<T>,
    pub generator: &'static str,
}

impl<T: Real> PulseSchedule<T> {
    pub fn constant(omega: AngularFrequency<T>, t_f: T, n_segments: usize) -> Self {
        let d = t_f / from_usize(n_segments);
        let segments = (0..n_segments)
            .map(|k| Segment {
                duration: d,
                amplitude: omega,
                sample_time: d * (from_usize::<T>(k) + lit(0.5)),
            })
            .collect();
        Self {
            segments,
            t_f,
            omega_i: omega,
            omega_f: omega,
            generator: "constant",
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> T {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = AngularFrequency<T>> + '_ {
        self.segments.iter().map(|s| s.amplitude)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        let (Some(first), Some(last)) = (self.segments.first(), self.segments.last()) else {
            return bad("schedule has no segments".into());
        };
        if self.segments.iter().any(|s| !(s.duration >= T::zero()) || !s.amplitude.is_finite()) {
            return bad("segment with negative duration or non-finite amplitude".into());
        }
        let total = self.total_duration();
        if (total - self.t_f).abs() > lit::<T>(1e-12) * self.t_f {
            return bad(format!("durations sum to {total}, expected {}", self.t_f));
        }
        let rel = |a: T, b: T| (a - b).abs() <= lit::<T>(1e-9) * b.abs().max(T::min_positive_value());
        if !rel(first.amplitude.0, self.omega_i.0) || !rel(last.amplitude.0, self.omega_f.0) {
            return bad("endpoint amplitudes do not match omega_i / omega_f".into());
        }
        if self.omega_i.0 > self.omega_f.0
            && self
                .segments
                .windows(2)
                .any(|w| w[1].amplitude.0 > w[0].amplitude.0)
        {
            return bad("ramp-down schedule is not monotone".into());
        }
        Ok(())
    }

    /// CSV export: `segment_index,duration_s,amplitude_rad_per_s`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let io = |e: csv::Error| Error::Numerical(format!("csv write failed: {e}"));
        w.write_record(["segment_index", "duration_s", "amplitude_rad_per_s"])
            .map_err(io)?;
        for (k, s) in self.segments.iter().enumerate() {
            w.write_record([
                k.to_string(),
                s.duration.as_f64().to_string(),
                s.amplitude.0.as_f64().to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Numerical(format!("csv flush failed: {e}")))
    }
}

/// A continuous ramp Ω(s) on the dimensionless time s = t/t_f ∈ [0, 1].
pub trait RampCurve<T: Real>: Sync {
    fn amplitude(&self, s: T) -> T;

    fn start(&self) -> T {
        self.amplitude(T::zero())
    }

    fn end(&self) -> T {
        self.amplitude(T::one())
    }

    /// Dynamical phase ∫₀ˢ √(Ω² + x²) t_f ds′ accumulated by the two-level
    /// gap at field `x`.
    fn phase(&self, s: T, x: T, t_f: T) -> T {
        let f = |v: T| self.amplitude(v).hypot(x);
        adaptive_simpson(&f, T::zero(), s, lit::<T>(1e-10) * (f(T::zero()) + f(s)) * s, 40) * t_f
    }
}

fn adaptive_simpson<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, tol: T, depth: usize) -> T {
    let half = lit::<T>(0.5);
    let simpson = |a: T, b: T, fa: T, fm: T, fb: T| (b - a) / lit(6.0) * (fa + lit::<T>(4.0) * fm + fb);
    #[allow(clippy::too_many_arguments)]
    fn rec<T: Real>(
        f: &impl Fn(T) -> T,
        simpson: &impl Fn(T, T, T, T, T) -> T,
        a: T,
        b: T,
        fa: T,
        fm: T,
        fb: T,
        whole: T,
        tol: T,
        depth: usize,
    ) -> T {
        let half = lit::<T>(0.5);
        let m = (a + b) * half;
        let (lm, rm) = ((a + m) * half, (m + b) * half);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= lit::<T>(15.0) * tol {
            left + right + delta / lit(15.0)
        } else {
            rec(f, simpson, a, m, fa, flm, fm, left, tol * half, depth - 1)
                + rec(f, simpson, m, b, fm, frm, fb, right, tol * half, depth - 1)
        }
    }
    if b <= a {
        return T::zero();
    }
    let m = (a + b) * half;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    rec(f, &simpson, a, b, fa, fm, fb, whole, tol.max(T::min_positive_value()), depth)
}

/// Constant-adiabaticity ramp: u = Ω/√(Ω²+x²) linear in s.
#[derive(Clone, Copy, Debug)]
pub struct FaquadCurve<T> {
    x_ref: T,
    u_i: T,
    u_f: T,
    // 1 − u at both ends, kept separately for precision near u → 1
    w_i: T,
    w_f: T,
}

impl<T: Real> FaquadCurve<T> {
    pub fn new(omega_i: T, omega_f: T, x_ref: T) -> Result<Self> {
        if !(x_ref > T::zero()) {
            return Err(Error::InvalidSchedule(
                "FAQUAD ramp needs a positive reference field x_ref".into(),
            ));
        }
        let split = |omega: T| {
            let e = omega.hypot(x_ref);
            (omega / e, x_ref * x_ref / (e * (e + omega)))
        };
        let (u_i, w_i) = split(omega_i);
        let (u_f, w_f) = split(omega_f);
        Ok(Self {
            x_ref,
            u_i,
            u_f,
            w_i,
            w_f,
        })
    }

    fn uw(&self, s: T) -> (T, T) {
        (
            self.u_i + (self.u_f - self.u_i) * s,
            self.w_i + (self.w_f - self.w_i) * s,
        )
    }

    /// Mixing angle θ = arcsin u at s.
    fn angle(&self, s: T) -> T {
        let (u, w) = self.uw(s);
        u.atan2((w * (T::one() + u)).sqrt())
    }

    /// Constant value of the adiabaticity parameter over a ramp of length t_f.
    pub fn adiabaticity(&self, t_f: T) -> T {
        (self.u_i - self.u_f).abs() / (lit::<T>(2.0) * self.x_ref * t_f)
    }
}

impl<T: Real> RampCurve<T> for FaquadCurve<T> {
    fn amplitude(&self, s: T) -> T {
        let (u, w) = self.uw(s);
        self.x_ref * u / (w * (T::one() + u)).sqrt()
    }

    fn phase(&self, s: T, x: T, t_f: T) -> T {
        if x != self.x_ref {
            let f = |v: T| self.amplitude(v).hypot(x);
            return adaptive_simpson(&f, T::zero(), s, lit::<T>(1e-10) * (f(T::zero()) + f(s)) * s, 40)
                * t_f;
        }
        // ∫ x/cos θ dt with du = cos θ dθ and u linear in t
        let du = self.u_f - self.u_i;
        if du == T::zero() {
            return self.amplitude(T::zero()).hypot(x) * s * t_f;
        }
        (t_f * x * (self.angle(s) - self.angle(T::zero())) / du).abs()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LinearRamp<T> {
    pub omega_i: T,
    pub omega_f: T,
}

impl<T: Real> RampCurve<T> for LinearRamp<T> {
    fn amplitude(&self, s: T) -> T {
        self.omega_i + (self.omega_f - self.omega_i) * s
    }
}

/// The rational closed form
/// `Ω(s) = Ω_i (4w⁴φs + w² + (1−s)4φw²) / ((1−s)w² + s + 4φw²)`
/// with `w = Ω_f/Ω_i` and φ the golden ratio, evaluated verbatim.
#[derive(Clone, Copy, Debug)]
pub struct ClosedFormCurve<T> {
    pub omega_i: T,
    pub ratio: T,
}

impl<T: Real> ClosedFormCurve<T> {
    pub fn new(omega_i: T, omega_f: T) -> Self {
        Self {
            omega_i,
            ratio: omega_f / omega_i,
        }
    }

    pub fn golden_ratio() -> T {
        (T::one() + lit::<T>(5.0).sqrt()) / lit(2.0)
    }
}

impl<T: Real> RampCurve<T> for ClosedFormCurve<T> {
    fn amplitude(&self, s: T) -> T {
        let phi4 = lit::<T>(4.0) * Self::golden_ratio();
        let w2 = self.ratio * self.ratio;
        let num = phi4 * w2 * w2 * s + (w2 + (T::one() - s) * phi4 * w2);
        let den = (T::one() - s) * w2 + s + phi4 * w2;
        self.omega_i * num / den
    }
}

/// Boundary check of the closed form against the requested endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryReport<T> {
    pub requested_omega_i: AngularFrequency<T>,
    pub requested_omega_f: AngularFrequency<T>,
    pub omega_at_start: AngularFrequency<T>,
    pub omega_at_end: AngularFrequency<T>,
    pub start_relative_error: T,
    pub end_relative_error: T,
    /// Both endpoints within 1e-9 relative of the requested values.
    pub boundaries_satisfied: bool,
    /// Largest |Ω_closed − Ω_faquad| / Ω_faquad over a uniform grid in s,
    /// when a FAQUAD reference could be built.
    pub max_relative_deviation_from_faquad: Option<T>,
}

/// Samples a monotone non-increasing ramp into square pulses.
///
/// The first and last pulses carry the curve's own endpoint values, and
/// `x_ref` sets the field used by [`Quantization::PhaseBalanced`].
pub fn discretize<T: Real>(
    curve: &dyn RampCurve<T>,
    t_f: T,
    n_segments: usize,
    quantization: Quantization,
    x_ref: T,
    generator: &'static str,
) -> Result<PulseSchedule<T>> {
    if n_segments < 2 {
        return Err(Error::InvalidSchedule(format!(
            "need at least 2 segments, got {n_segments}"
        )));
    }
    if !(t_f > T::zero()) {
        return Err(Error::InvalidSchedule("t_f must be positive".into()));
    }
    let (start, end) = (curve.start(), curve.end());
    check_monotone(curve, 4 * n_segments)?;

    if start == end {
        let mut s = PulseSchedule::constant(AngularFrequency(start), t_f, n_segments);
        s.generator = generator;
        return Ok(s);
    }

    let last = n_segments - 1;
    let (nodes, amplitudes): (Vec<T>, Vec<T>) = match quantization {
        Quantization::PhaseBalanced => {
            if !(x_ref > T::zero()) {
                return Err(Error::InvalidSchedule(
                    "phase-balanced quantization needs a positive x_ref".into(),
                ));
            }
            let mix = |omega: T| omega / omega.hypot(x_ref);
            let (u0, u1) = (mix(start), mix(end));
            let total_phase = curve.phase(T::one(), x_ref, t_f);
            let cdf = |s: T| {
                lit::<T>(0.5)
                    * ((u0 - mix(curve.amplitude(s))) / (u0 - u1)
                        + curve.phase(s, x_ref, t_f) / total_phase)
            };
            let mut lo = T::zero();
            let nodes: Vec<T> = (0..n_segments)
                .map(|k| {
                    if k == 0 {
                        return T::zero();
                    }
                    if k == last {
                        return T::one();
                    }
                    let goal = from_usize::<T>(k) / from_usize(last);
                    let s = bisect(|s| cdf(s) - goal, lo, T::one());
                    lo = s;
                    s
                })
                .collect();
            let amps = nodes.iter().map(|&s| curve.amplitude(s)).collect();
            (nodes, amps)
        }
        Quantization::UniformAmplitude => {
            let step = (start - end) / from_usize(last);
            let amps: Vec<T> = (0..n_segments)
                .map(|k| start - step * from_usize(k))
                .collect();
            let nodes = amps
                .iter()
                .enumerate()
                .map(|(k, &a)| match k {
                    0 => T::zero(),
                    k if k == last => T::one(),
                    _ => time_of(curve, a),
                })
                .collect();
            (nodes, amps)
        }
    };

    let boundaries: Vec<T> = match quantization {
        Quantization::PhaseBalanced => std::iter::once(T::zero())
            .chain(nodes.windows(2).map(|w| (w[0] + w[1]) * lit(0.5)))
            .chain(std::iter::once(T::one()))
            .collect(),
        Quantization::UniformAmplitude => {
            let step = (start - end) / from_usize(n_segments);
            (0..=n_segments)
                .map(|k| match k {
                    0 => T::zero(),
                    k if k == n_segments => T::one(),
                    _ => time_of(curve, start - step * from_usize(k)),
                })
                .collect()
        }
    };

    let mut segments: Vec<Segment<T>> = (0..n_segments)
        .map(|k| Segment {
            duration: (boundaries[k + 1] - boundaries[k]) * t_f,
            amplitude: AngularFrequency(amplitudes[k]),
            sample_time: nodes[k] * t_f,
        })
        .collect();
    segments[0].amplitude = AngularFrequency(start);
    segments[last].amplitude = AngularFrequency(end);

    let schedule = PulseSchedule {
        segments,
        t_f,
        omega_i: AngularFrequency(start),
        omega_f: AngularFrequency(end),
        generator,
    };
    schedule.validate()?;
    Ok(schedule)
}

fn check_monotone<T: Real>(curve: &dyn RampCurve<T>, samples: usize) -> Result<()> {
    let mut prev = curve.start();
    let scale = prev.abs().max(curve.end().abs()).max(T::min_positive_value());
    for k in 1..=samples {
        let value = curve.amplitude(from_usize::<T>(k) / from_usize(samples));
        if !value.is_finite() {
            return Err(Error::InvalidSchedule("ramp evaluates to a non-finite value".into()));
        }
        if value > prev + lit::<T>(1e-12) * scale {
            return Err(Error::InvalidSchedule(
                "ramp is not monotone non-increasing".into(),
            ));
        }
        prev = value;
    }
    Ok(())
}

/// Root of an increasing function on [lo, hi] by bisection.
fn bisect<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) * lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * lit(0.5)
}

/// Dimensionless time at which a non-increasing ramp reaches `omega`.
fn time_of<T: Real>(curve: &dyn RampCurve<T>, omega: T) -> T {
    bisect(|s| omega - curve.amplitude(s), T::zero(), T::one())
}

fn resolved_x_ref<T: Real>(spec: &FaquadSpec<T>) -> Result<T> {
    spec.validate()?;
    spec.x_ref_value()
}

/// FAQUAD ramp-down for `spec.x_ref`, independent of `spec.generator`.
pub fn faquad_ode<T: Real>(spec: &FaquadSpec<T>) -> Result<PulseSchedule<T>> {
    let x_ref = resolved_x_ref(spec)?;
    if spec.omega_i == spec.omega_f {
        let mut s = PulseSchedule::constant(spec.omega_i, spec.t_f, spec.n_segments);
        s.generator = Generator::OdeFaquad.tag();
        return Ok(s);
    }
    let curve = FaquadCurve::new(spec.omega_i.0, spec.omega_f.0, x_ref)?;
    let mut schedule = discretize(
        &curve,
        spec.t_f,
        spec.n_segments,
        spec.quantization,
        x_ref,
        Generator::OdeFaquad.tag(),
    )?;
    // the curve reproduces its endpoints only up to rounding
    let last = schedule.segments.len() - 1;
    schedule.segments[0].amplitude = spec.omega_i;
    schedule.segments[last].amplitude = spec.omega_f;
    schedule.omega_i = spec.omega_i;
    schedule.omega_f = spec.omega_f;
    Ok(schedule)
}

pub fn linear_ramp<T: Real>(spec: &FaquadSpec<T>) -> Result<PulseSchedule<T>> {
    spec.validate()?;
    let curve = LinearRamp {
        omega_i: spec.omega_i.0,
        omega_f: spec.omega_f.0,
    };
    let x_ref = spec.x_ref.map(|x| x.0).unwrap_or_else(T::zero);
    discretize(
        &curve,
        spec.t_f,
        spec.n_segments,
        spec.quantization,
        x_ref,
        Generator::Linear.tag(),
    )
}

/// Closed-form ramp plus its boundary report. The schedule follows the
/// formula's own endpoint values; any mismatch with the requested Ω_f is
/// reported, not corrected.
pub fn faquad_closed_form<T: Real>(
    spec: &FaquadSpec<T>,
) -> Result<(PulseSchedule<T>, BoundaryReport<T>)> {
    spec.validate()?;
    if !(spec.omega_i.0 > T::zero()) {
        return Err(Error::InvalidSchedule("closed form needs omega_i > 0".into()));
    }
    let curve = ClosedFormCurve::new(spec.omega_i.0, spec.omega_f.0);
    let x_ref = spec.x_ref.map(|x| x.0).unwrap_or_else(T::zero);
    let quantization = if x_ref > T::zero() {
        spec.quantization
    } else {
        Quantization::UniformAmplitude
    };
    let schedule = discretize(
        &curve,
        spec.t_f,
        spec.n_segments,
        quantization,
        x_ref,
        Generator::ClosedForm.tag(),
    )?;

    let rel = |got: T, want: T| {
        if want == T::zero() {
            got.abs()
        } else {
            ((got - want) / want).abs()
        }
    };
    let (start, end) = (curve.start(), curve.end());
    let start_relative_error = rel(start, spec.omega_i.0);
    let end_relative_error = rel(end, spec.omega_f.0);
    let tol = lit::<T>(1e-9);

    let max_relative_deviation_from_faquad = if x_ref > T::zero() && spec.omega_i != spec.omega_f
    {
        let reference = FaquadCurve::new(spec.omega_i.0, spec.omega_f.0, x_ref)?;
        let grid = 1000;
        Some(
            (0..=grid)
                .map(|k| {
                    let s = from_usize::<T>(k) / from_usize(grid);
                    rel(curve.amplitude(s), reference.amplitude(s))
                })
                .fold(T::zero(), T::max),
        )
    } else {
        None
    };

    let report = BoundaryReport {
        requested_omega_i: spec.omega_i,
        requested_omega_f: spec.omega_f,
        omega_at_start: AngularFrequency(start),
        omega_at_end: AngularFrequency(end),
        start_relative_error,
        end_relative_error,
        boundaries_satisfied: start_relative_error <= tol && end_relative_error <= tol,
        max_relative_deviation_from_faquad,
    };
    Ok((schedule, report))
}

/// Schedule for `spec` using its generator. `x_ref` must be resolved first
/// for FAQUAD ramps.
pub fn build_schedule<T: Real>(spec: &FaquadSpec<T>) -> Result<PulseSchedule<T>> {
    match spec.generator {
        Generator::OdeFaquad => faquad_ode(spec),
        Generator::ClosedForm => faquad_closed_form(spec).map(|(s, _)| s),
        Generator::Linear => linear_ramp(spec),
    }
}

/// Largest `|ΔΩ/Δt| / (Ω² + x²)` over consecutive pulses, with Δt the
/// distance between pulse centres and Ω the mean of the two amplitudes.
pub fn adiabaticity_margin<T: Real>(schedule: &PulseSchedule<T>, x: AngularFrequency<T>) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::InvalidSchedule("field must be finite".into()));
    }
    if schedule.segments.iter().any(|s| s.duration <= T::zero()) {
        return Err(Error::InvalidSchedule("zero-duration segment".into()));
    }
    let half = lit::<T>(0.5);
    Ok(schedule
        .segments
        .windows(2)
        .map(|w| {
            let rate = (w[1].amplitude.0 - w[0].amplitude.0).abs()
                / ((w[0].duration + w[1].duration) * half);
            let omega = (w[0].amplitude.0 + w[1].amplitude.0) * half;
            let denom = omega * omega + x.0 * x.0;
            if rate == T::zero() {
                T::zero()
            } else {
                rate / denom
            }
        })
        .fold(T::zero(), T::max))
}

/// Adiabaticity parameter `c = |θ̇| / (2√(Ω²+x²))` between consecutive
/// pulse sample points, as `(time, c)` pairs.
///
/// θ = arctan(Ω/x) is differenced directly and the gap is evaluated at the
/// mean angle, which stays accurate where θ approaches π/2.
pub fn adiabaticity_profile<T: Real>(
    schedule: &PulseSchedule<T>,
    x: AngularFrequency<T>,
) -> Result<Vec<(T, T)>> {
    if !(x.0 > T::zero()) {
        return Err(Error::InvalidSchedule("profile needs a positive field".into()));
    }
    let half = lit::<T>(0.5);
    schedule
        .segments
        .windows(2)
        .map(|w| {
            let dt = w[1].sample_time - w[0].sample_time;
            if !(dt > T::zero()) {
                return Err(Error::InvalidSchedule("coincident sample times".into()));
            }
            let a0 = w[0].amplitude.0.atan2(x.0);
            let a1 = w[1].amplitude.0.atan2(x.0);
            let mid = (a0 + a1) * half;
            let c = (a1 - a0).abs() * mid.cos() / (lit::<T>(2.0) * x.0 * dt);
            Ok(((w[0].sample_time + w[1].sample_time) * half, c))
        })
        .collect()
}
