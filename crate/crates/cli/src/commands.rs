use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use qperceptron::gate::{
    alpha_sweep, concurrent_sweep, default_phase_grid, measure_coupling_ramsey, sweep_activation,
    RamseyOptions, SweepOptions,
};
use qperceptron::io::{
    from_json, NoiseFile, OptimizeFile, ProgramFile, RamseyFile, ScheduleFile, SweepFile, XnorFile,
};
use qperceptron::network::{evaluate_truth_table, optimize_weights, run_network};
use qperceptron::schedule::{adiabaticity_margin, build_schedule, faquad_closed_form, Generator, Quantization};
use qperceptron::{Bits, NetworkModel, NoiseKind, PerceptronGateSpec, SpinChainConfig};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::output::{emit, json_bytes, sidecar, write_atomic};
use crate::{CliResult, Failure};

fn load<T: DeserializeOwned + Default>(text: Option<&str>) -> CliResult<T> {
    match text {
        Some(t) => Ok(from_json(t)?),
        None => Ok(T::default()),
    }
}

fn echo<T: serde::Serialize>(file: &T) -> Value {
    serde_json::to_value(file).expect("config files always serialize")
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> qperceptron::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

/// Main CSV to `out` (or stdout) and the JSON sidecar next to it.
fn emit_table(out: Option<&Path>, csv: &[u8], meta: &Value) -> CliResult<()> {
    match out {
        Some(p) => {
            write_atomic(p, csv)?;
            write_atomic(&sidecar(p), &json_bytes(meta))
        }
        None => emit(None, csv),
    }
}

pub fn sweep(config: Option<&str>, out: Option<&Path>, seed: u64, analytic_only: bool) -> CliResult<()> {
    let mut file: SweepFile = load(config)?;
    if file.sweep.n_alpha == 0 {
        return Err(Failure::Config("sweep.n_alpha must be at least 1".into()));
    }
    let template = PerceptronGateSpec {
        config: file.register.to_config()?,
        schedule: file.schedule.to_spec()?,
        noise: file.noise.to_model(seed),
    };
    let points = if file.sweep.concurrent {
        concurrent_sweep(file.sweep.n_alpha)
    } else {
        let series: Vec<(&str, f64)> = file
            .sweep
            .series
            .iter()
            .map(|s| (s.name.as_str(), s.theta_scale))
            .collect();
        alpha_sweep(file.sweep.n_alpha, &series)
    };
    let options = SweepOptions {
        shots: file.shots,
        seed,
        analytic_only,
    };
    let record = sweep_activation(&template, &points, options)?;
    file.schedule.x_ref_hz = record.metadata.get("x_ref_hz").and_then(Value::as_f64);

    let csv = csv_bytes(|b| record.write_csv(b))?;
    let mut meta = record.to_json();
    meta["config"] = echo(&file);
    meta["seed"] = json!(seed);
    if let (Some(rms), Some(max)) = (
        record.metadata.get("rms_deviation"),
        record.metadata.get("max_deviation"),
    ) {
        eprintln!("sweep: {} points, rms deviation {rms}, max deviation {max}", record.rows.len());
    }
    emit_table(out, &csv, &meta)
}

fn parity_target(bits: &Bits) -> f64 {
    if bits.parity() {
        0.0
    } else {
        1.0
    }
}

pub fn xnor(config: Option<&str>, out: Option<&Path>, seed: u64, noiseless: bool) -> CliResult<()> {
    let mut file: XnorFile = load(config)?;
    if noiseless {
        file.noise.kind = NoiseKind::None;
    }
    let program = file.program.to_program()?;
    let report = evaluate_truth_table(&program, &file.noise.to_model(seed))?;

    let (mut even, mut odd) = (Vec::new(), Vec::new());
    let mut sq = 0.0;
    for (bits, &p) in &report.outputs.rows {
        if bits.parity() {
            odd.push(p)
        } else {
            even.push(p)
        }
        sq += (p - parity_target(bits)).powi(2);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let separation = even.iter().copied().fold(f64::INFINITY, f64::min)
        - odd.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rms_error = (sq / report.outputs.rows.len() as f64).sqrt();
    eprintln!(
        "xnor: even-parity mean {:.4}, odd-parity mean {:.4}, separation {:.4}",
        mean(&even),
        mean(&odd),
        separation
    );
    let rows: BTreeMap<String, f64> = report
        .outputs
        .rows
        .iter()
        .map(|(b, &p)| (b.to_string(), p))
        .collect();
    let controls: BTreeMap<String, &Vec<f64>> = report
        .control_populations
        .iter()
        .map(|(b, v)| (b.to_string(), v))
        .collect();
    let value = json!({
        "config": echo(&file),
        "seed": seed,
        "outputs": rows,
        "control_populations": controls,
        "even_parity_mean": mean(&even),
        "odd_parity_mean": mean(&odd),
        "separation": separation,
        "parity_ordered": separation > 0.0,
        "rms_error": rms_error,
    });
    emit(out, &json_bytes(&value))
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Truth-table JSON (same as --config).
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub j_max_hz: Option<f64>,
    #[arg(long)]
    pub omega_f_hz: Option<f64>,
    #[arg(long)]
    pub t_f_s: Option<f64>,
    #[arg(long)]
    pub n_segments: Option<usize>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Add a bias qubit and search its coupling.
    #[arg(long)]
    pub include_bias: bool,
    /// Optimize against pure dephasing with this T2.
    #[arg(long)]
    pub t2_s: Option<f64>,
}

pub fn optimize(table: Option<&str>, out: Option<&Path>, seed: u64, args: &OptimizeArgs) -> CliResult<()> {
    let mut file = match table {
        Some(t) => from_json::<OptimizeFile>(t)?,
        None => OptimizeFile::xnor(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = args.$field { file.$field = v; })*};
    }
    set!(layers, j_max_hz, omega_f_hz, t_f_s, n_segments, starts, max_evals);
    if args.include_bias {
        file.include_bias = true;
    }
    if let Some(t2) = args.t2_s {
        file.noise = NoiseFile::dephasing(t2);
    }
    let target = file.table()?;
    let noise = file.noise.to_model(seed);
    let outcome = optimize_weights(&target, &file.settings(seed), &noise)?;
    let mut achieved = BTreeMap::new();
    for bits in target.rows.keys() {
        let p = run_network(&outcome.program, bits, &noise, NetworkModel::Reduced)?;
        achieved.insert(bits.to_string(), p);
    }
    eprintln!("optimize: loss {:.6} over {} starts", outcome.loss, outcome.starts.len());
    let starts: Vec<Value> = outcome
        .starts
        .iter()
        .map(|s| {
            json!({
                "index": s.index,
                "seed": s.seed,
                "from_surrogate": s.from_surrogate,
                "initial": s.initial,
                "loss": s.loss,
                "evals": s.evals,
            })
        })
        .collect();
    let value = json!({
        "config": echo(&file),
        "seed": seed,
        "loss": outcome.loss,
        "program": echo(&ProgramFile::from_program(&outcome.program)),
        "achieved": achieved,
        "starts": starts,
    });
    emit(out, &json_bytes(&value))
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub omega_i_hz: Option<f64>,
    #[arg(long)]
    pub omega_f_hz: Option<f64>,
    #[arg(long)]
    pub t_f_s: Option<f64>,
    #[arg(long)]
    pub n_segments: Option<usize>,
    /// Reference field; the three-qubit chain's worst case by default.
    #[arg(long)]
    pub x_ref_hz: Option<f64>,
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorArg>,
    #[arg(long, value_enum)]
    pub quantization: Option<QuantizationArg>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum GeneratorArg {
    OdeFaquad,
    ClosedForm,
    Linear,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum QuantizationArg {
    PhaseBalanced,
    UniformAmplitude,
}

pub fn schedule(config: Option<&str>, out: Option<&Path>, args: &ScheduleArgs) -> CliResult<()> {
    let mut file: ScheduleFile = load(config)?;
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = args.$field { file.$field = v; })*};
    }
    set!(omega_i_hz, omega_f_hz, t_f_s, n_segments);
    if args.x_ref_hz.is_some() {
        file.x_ref_hz = args.x_ref_hz;
    }
    if let Some(g) = args.generator {
        file.generator = match g {
            GeneratorArg::OdeFaquad => Generator::OdeFaquad,
            GeneratorArg::ClosedForm => Generator::ClosedForm,
            GeneratorArg::Linear => Generator::Linear,
        };
    }
    if let Some(q) = args.quantization {
        file.quantization = match q {
            QuantizationArg::PhaseBalanced => Quantization::PhaseBalanced,
            QuantizationArg::UniformAmplitude => Quantization::UniformAmplitude,
        };
    }
    if file.x_ref_hz.is_none() {
        file.x_ref_hz = Some(SpinChainConfig::<f64>::three_ion().field_bound().hz());
    }
    let spec = file.to_spec()?;
    let (schedule, report) = match spec.generator {
        Generator::ClosedForm => {
            let (s, r) = faquad_closed_form(&spec)?;
            (s, Some(r))
        }
        _ => (build_schedule(&spec)?, None),
    };
    let csv = csv_bytes(|b| schedule.write_csv(b))?;
    let x_ref = spec.x_ref.expect("x_ref set above");
    let margin = adiabaticity_margin(&schedule, x_ref)?;
    let boundary = report.map(|r| {
        json!({
            "requested_omega_i_hz": r.requested_omega_i.hz(),
            "requested_omega_f_hz": r.requested_omega_f.hz(),
            "omega_at_start_hz": r.omega_at_start.hz(),
            "omega_at_end_hz": r.omega_at_end.hz(),
            "start_relative_error": r.start_relative_error,
            "end_relative_error": r.end_relative_error,
            "boundaries_satisfied": r.boundaries_satisfied,
            "max_relative_deviation_from_faquad": r.max_relative_deviation_from_faquad,
        })
    });
    if let Some(b) = &boundary {
        eprintln!("schedule: closed form boundary report {b}");
    }
    let meta = json!({
        "config": echo(&file),
        "generator": schedule.generator,
        "n_segments": schedule.len(),
        "first_amplitude_hz": schedule.segments.first().map(|s| s.amplitude.hz()),
        "last_amplitude_hz": schedule.segments.last().map(|s| s.amplitude.hz()),
        "adiabaticity_margin": margin,
        "boundary_report": boundary,
    });
    emit_table(out, &csv, &meta)
}

#[derive(Args, Debug)]
pub struct RamseyArgs {
    /// Free-evolution time in seconds.
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub n_phases: Option<usize>,
    /// Binomial readout with this many shots per phase.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Pure dephasing with this T2 on every qubit.
    #[arg(long)]
    pub t2_s: Option<f64>,
}

pub fn ramsey(config: Option<&str>, out: Option<&Path>, seed: u64, args: &RamseyArgs) -> CliResult<()> {
    let mut file: RamseyFile = load(config)?;
    if let Some(t) = args.time {
        file.time_s = t;
    }
    if let Some(n) = args.n_phases {
        file.n_phases = n;
    }
    if args.shots.is_some() {
        file.shots = args.shots;
    }
    if let Some(t2) = args.t2_s {
        file.noise = NoiseFile::dephasing(t2);
    }
    let cfg = file.register.to_config()?;
    let control = match file.control {
        Some(c) => c,
        None => cfg
            .controls()
            .next()
            .ok_or_else(|| Failure::Config("register has no control qubit".into()))?,
    };
    file.control = Some(control);
    let options = RamseyOptions {
        control: Some(control),
        noise: file.noise.to_model(seed),
        shots: file.shots,
        seed,
    };
    let phases = default_phase_grid::<f64>(file.n_phases);
    let r = measure_coupling_ramsey(&cfg, file.time_s, &phases, &options)?;
    let configured = cfg.effective_coupling(control);
    let relative_error = (r.coupling.0 - configured.0).abs() / configured.0.abs();
    eprintln!(
        "ramsey: J = {:.4} ± {:.4} Hz (configured {:.4} Hz)",
        r.coupling.hz(),
        r.coupling_stderr.hz(),
        configured.hz()
    );
    let fits: Vec<Value> = r
        .fits
        .iter()
        .map(|f| {
            json!({
                "offset": f.offset,
                "amplitude": f.amplitude,
                "phase": f.phase,
                "phase_stderr": f.phase_stderr,
            })
        })
        .collect();
    let value = json!({
        "config": echo(&file),
        "seed": seed,
        "coupling_hz": r.coupling.hz(),
        "coupling_stderr_hz": r.coupling_stderr.hz(),
        "configured_coupling_hz": configured.hz(),
        "relative_error": relative_error,
        "delta_phi": r.delta_phi,
        "time_s": r.time,
        "phases": r.phases,
        "p1_control_0": r.p1[0],
        "p1_control_1": r.p1[1],
        "fits": fits,
    });
    emit(out, &json_bytes(&value))
}
