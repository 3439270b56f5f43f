//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fail.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use qperceptron::evolve::{reference_propagator, ReferenceOptions};
use qperceptron::gate::{
    alpha_sweep, default_phase_grid, fit_sigmoid_shift, measure_coupling_ramsey,
    standard_sweep, sweep_activation, RamseyOptions, SweepOptions,
};
use qperceptron::hamiltonian::sector_ground_state;
use qperceptron::network::{
    evaluate_truth_table, optimize_weights, run_network, single_layer_grid_minimum,
    OptimizeSettings,
};
use qperceptron::schedule::{adiabaticity_profile, faquad_closed_form, faquad_ode, FaquadCurve, Generator};
use qperceptron::seeding::stream_rng;
use qperceptron::state::{gates, make_basis_state};
use qperceptron::{
    activation, propagate_piecewise, Bits, Freq, GateProgram, NetworkModel, Noise,
    PerceptronGateSpec, Spec, TruthTable,
};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn hz(v: f64) -> Freq {
    Freq::from_hz(v)
}

fn bits(s: &str) -> Bits {
    s.parse().unwrap()
}

fn ground_state_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = stream_rng(20_240_614, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut cfg = qperceptron::Config::three_ion();
        let j_max = cfg.j_max;
        cfg.set_scale(0, rng.random_range(-1.0..=1.0));
        cfg.bias_strength = j_max * rng.random_range(-1.0..=1.0);
        let omega = hz(rng.random_range(0.1..2000.0));
        let mut b = Bits::zeros(3);
        b.set(0, rng.random::<bool>());
        b.set(2, rng.random::<bool>());
        let (state, _) = sector_ground_state(&cfg, omega, &b).unwrap();
        let p1 = state.probability_one(cfg.target).unwrap();
        let expected = activation(cfg.field(&b) / omega);
        worst = worst.max((p1 - expected).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-10 && elapsed < Duration::from_secs(1),
        format!("max |P1 - f(x/Ω)| = {worst:.2e} over 100 tuples in {elapsed:.2?}"),
    )
}

fn sweep_points(record: &qperceptron::ExperimentRecord, series: &str) -> Vec<(f64, f64)> {
    record
        .series(series)
        .map(|r| (record.param(r, "u_control").unwrap(), r.p1_simulated.unwrap()))
        .collect()
}

fn adiabatic_gate() -> Outcome {
    let start = Instant::now();
    let spec = PerceptronGateSpec::<f64>::standard();
    let points = alpha_sweep(21, &[("theta=0", 0.0)]);
    let record = sweep_activation(&spec, &points, SweepOptions::default()).unwrap();
    let worst = record
        .rows
        .iter()
        .map(|r| (r.p1_simulated.unwrap() - r.p1_analytic).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        worst < 0.02 && record.rows.len() == 42 && elapsed < Duration::from_secs(30),
        format!("max |P1 - f| = {worst:.4} over {} points in {elapsed:.2?}", record.rows.len()),
    )
}

fn bias_shift() -> Outcome {
    let spec = PerceptronGateSpec::<f64>::standard();
    let record = sweep_activation(&spec, &standard_sweep(21), SweepOptions::default()).unwrap();
    // Θ_max = J = Ω_f here, so the expected displacement is ±1 on the x/Ω_f axis
    let expected = (spec.config.bias_strength / spec.schedule.omega_f).abs();
    let shift = |name| fit_sigmoid_shift(activation, &sweep_points(&record, name));
    let (zero, plus, minus) = (shift("theta=0"), shift("theta=+max"), shift("theta=-max"));
    let rel = |d: f64, want: f64| ((d - want) / want).abs();
    let (ep, em) = (rel(plus - zero, expected), rel(minus - zero, -expected));
    outcome(
        ep <= 0.05 && em <= 0.05,
        format!(
            "shifts +{:.4} / {:.4} relative to Θ=0 (expected ±{expected:.4}), errors {:.1}% / {:.1}%",
            plus - zero,
            minus - zero,
            100.0 * ep,
            100.0 * em
        ),
    )
}

fn faquad() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut endpoints_exact = true;
    for n in [500, 1000, 2000] {
        let mut spec = Spec::standard(hz(37.5)).with_x_ref(hz(75.0));
        spec.n_segments = n;
        let s = faquad_ode(&spec).unwrap();
        endpoints_exact &= s.segments[0].amplitude == spec.omega_i
            && s.segments[n - 1].amplitude == spec.omega_f;
        let c0 = FaquadCurve::new(spec.omega_i.0, spec.omega_f.0, 75.0 * std::f64::consts::TAU)
            .unwrap()
            .adiabaticity(spec.t_f);
        let profile = adiabaticity_profile(&s, hz(75.0)).unwrap();
        for &(_, c) in &profile[1..profile.len() - 1] {
            worst = worst.max((c / c0 - 1.0).abs());
        }
    }
    let mut closed = Spec::standard(hz(37.5)).with_x_ref(hz(75.0));
    closed.generator = Generator::ClosedForm;
    let report = faquad_closed_form(&closed);
    let report_ok = report.is_ok();
    let end = report
        .map(|(_, r)| format!("closed-form end {:.4} Hz vs requested 37.5 Hz", r.omega_at_end.hz()))
        .unwrap_or_else(|e| e.to_string());
    outcome(
        worst <= 0.01 && endpoints_exact && report_ok,
        format!("max |c/c0 - 1| = {worst:.2e}, endpoints exact: {endpoints_exact}, {end}"),
    )
}

fn propagator_oracle() -> Outcome {
    let start = Instant::now();
    let spec = PerceptronGateSpec::<f64>::standard();
    let schedule = spec.build_schedule().unwrap();
    let mut worst = 1.0f64;
    for input in ["000", "001", "100", "101"] {
        let mut state = make_basis_state(3, &bits(input)).unwrap();
        state.apply_single_qubit(1, &gates::hadamard()).unwrap();
        let fast = propagate_piecewise(&state, &spec.config, &schedule, &spec.noise).unwrap();
        let slow =
            reference_propagator(&state, &spec.config, &schedule, ReferenceOptions::default())
                .unwrap();
        worst = worst.min(fast.overlap(&slow).unwrap());
    }
    outcome(
        worst >= 1.0 - 1e-6,
        format!("min overlap {worst:.10} over 4 inputs in {:.2?}", start.elapsed()),
    )
}

fn ramsey() -> Outcome {
    let cfg = qperceptron::Config::three_ion();
    let j = cfg.effective_coupling(0);
    let phases = default_phase_grid::<f64>(24);
    let clean = measure_coupling_ramsey(&cfg, 5e-3, &phases, &RamseyOptions::default()).unwrap();
    let clean_err = ((clean.coupling - j) / j).abs();
    let noisy_opts = RamseyOptions {
        noise: Noise::dephasing(20e-3),
        shots: Some(2000),
        seed: 11,
        ..RamseyOptions::default()
    };
    let noisy = measure_coupling_ramsey(&cfg, 5e-3, &phases, &noisy_opts).unwrap();
    let sigma = noisy.coupling_stderr.0;
    let z = (noisy.coupling - j).0 / sigma;
    outcome(
        clean_err < 0.01 && z.abs() <= 3.0 && sigma > 0.0,
        format!(
            "noiseless J error {:.2e}; T2 = 20 ms with 2000 shots: J = {:.3} ± {:.3} Hz ({z:+.2}σ)",
            clean_err,
            noisy.coupling.hz(),
            noisy.coupling_stderr.hz()
        ),
    )
}

fn xnor_synthesis() -> Outcome {
    let start = Instant::now();
    let target = TruthTable::xnor();
    let noiseless = Noise::noiseless();
    let settings = OptimizeSettings::standard(2);
    let out = optimize_weights(&target, &settings, &noiseless).unwrap();
    let bound_ok = out.program.layers.iter().all(|l| {
        l.couplings
            .iter()
            .all(|c| c.abs().0 <= settings.j_max.0 * (1.0 + 1e-12))
    });
    let mut even: f64 = 1.0;
    let mut odd: f64 = 0.0;
    for b in target.rows.keys() {
        let p = run_network(&out.program, b, &noiseless, NetworkModel::Reference).unwrap();
        if b.parity() {
            odd = odd.max(p);
        } else {
            even = even.min(p);
        }
    }
    let (single, _) = single_layer_grid_minimum(&target, &settings, &noiseless, 21).unwrap();
    let elapsed = start.elapsed();
    outcome(
        even >= 0.9 && odd <= 0.1 && bound_ok && single >= 0.25 && elapsed < Duration::from_secs(600),
        format!(
            "2 layers: loss {:.4}, min even {even:.4}, max odd {odd:.4}; 1-layer grid minimum {single:.4}; {elapsed:.1?}",
            out.loss
        ),
    )
}

fn xnor_reference_weights() -> Outcome {
    let program = GateProgram::<f64>::xnor_reference();
    let report = evaluate_truth_table(&program, &Noise::dephasing(20e-3)).unwrap();
    let rows = &report.outputs.rows;
    let even = [rows[&bits("00")], rows[&bits("11")]];
    let odd = [rows[&bits("01")], rows[&bits("10")]];
    let separation = even[0].min(even[1]) - odd[0].max(odd[1]);
    let in_band = even.iter().all(|p| (p - 0.65).abs() <= 0.15) && odd.iter().all(|p| (p - 0.3).abs() <= 0.15);
    outcome(
        separation >= 0.2 && in_band,
        format!(
            "even {:.3}/{:.3}, odd {:.3}/{:.3}, separation {separation:.3}",
            even[0], even[1], odd[0], odd[1]
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_qperceptron"))
        .args(args)
        .arg("--output")
        .arg(&out)
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "{args:?} failed");
    let mut bytes = std::fs::read(&out).unwrap();
    if let Ok(side) = std::fs::read(out.with_extension("json")) {
        bytes.extend(side);
    }
    bytes
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let shots = dir.path().join("shots.json");
    std::fs::write(&shots, r#"{"shots": 500, "sweep": {"n_alpha": 11}}"#).unwrap();
    let table = dir.path().join("xnor.json");
    std::fs::write(
        &table,
        r#"{"rows": {"00": 1, "01": 0, "10": 0, "11": 1}, "starts": 2, "max_evals": 60, "n_segments": 200}"#,
    )
    .unwrap();
    let shots = shots.to_str().unwrap();
    let table = table.to_str().unwrap();
    let runs: [&[&str]; 5] = [
        &["sweep", "--seed", "7", "--config", shots],
        &["xnor", "--seed", "7"],
        &["schedule"],
        &["ramsey", "--seed", "7", "--shots", "300", "--t2-s", "0.02"],
        &["optimize", "--seed", "7", table],
    ];
    let mut mismatched = Vec::new();
    for args in runs {
        let a = run_cli(dir.path(), args);
        let b = run_cli(dir.path(), args);
        if a != b || a.is_empty() {
            mismatched.push(args[0]);
        }
    }
    // a different seed must actually change the shot-noise output
    let other = run_cli(dir.path(), &["sweep", "--seed", "8", "--config", shots]);
    let seeded = other != run_cli(dir.path(), &["sweep", "--seed", "7", "--config", shots]);
    outcome(
        mismatched.is_empty() && seeded,
        format!("mismatched verbs: {mismatched:?}; seed changes output: {seeded}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("ground-state oracle", ground_state_oracle),
        ("adiabatic gate", adiabatic_gate),
        ("bias shift", bias_shift),
        ("faquad schedule", faquad),
        ("propagator oracle", propagator_oracle),
        ("ramsey coupling", ramsey),
        ("xnor synthesis", xnor_synthesis),
        ("xnor reference weights", xnor_reference_weights),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {} ({name}): {} - {}",
            k + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
