//! JSON configuration files. Frequencies are plain Hz and times are seconds
//! (`*_hz`, `*_s`); values are converted to rad/s on load. Every file type
//! serializes back with all defaults filled in, which is what the command
//! line tool echoes into its outputs.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{
    NoiseKind, NoiseModel, Representation, SpinChainConfig, DEFAULT_J_MAX_HZ, DEFAULT_OMEGA_I_HZ,
    DEFAULT_T2_S, DEFAULT_T_F_S,
};
use crate::error::{Error, Result};
use crate::network::{GateProgram, Layer, OptimizeSettings, TruthTable};
use crate::schedule::{FaquadSpec, Generator, Quantization, DEFAULT_SEGMENTS};
use crate::state::Bits;
use crate::units::AngularFrequency;

type Hz = AngularFrequency<f64>;

fn hz(v: f64) -> Hz {
    AngularFrequency::from_hz(v)
}

/// Parses `text`, reporting unknown or missing fields by name.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidConfig(format!("{name} must be finite")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterFile {
    pub n_qubits: usize,
    pub target: usize,
    #[serde(default)]
    pub bias: Option<usize>,
    /// Bare coupling of each control qubit to the target.
    pub couplings_hz: BTreeMap<usize, f64>,
    #[serde(default)]
    pub bias_hz: f64,
    #[serde(default)]
    pub coupling_scales: BTreeMap<usize, f64>,
    #[serde(default)]
    pub detunings_hz: Vec<f64>,
    pub j_max_hz: f64,
}

impl Default for RegisterFile {
    /// Control, target and bias in a chain at J = Θ = 37.5 Hz.
    fn default() -> Self {
        Self {
            n_qubits: 3,
            target: 1,
            bias: Some(2),
            couplings_hz: BTreeMap::from([(0, DEFAULT_J_MAX_HZ)]),
            bias_hz: DEFAULT_J_MAX_HZ,
            coupling_scales: BTreeMap::new(),
            detunings_hz: Vec::new(),
            j_max_hz: DEFAULT_J_MAX_HZ,
        }
    }
}

impl RegisterFile {
    pub fn to_config(&self) -> Result<SpinChainConfig<f64>> {
        let mut couplings = BTreeMap::new();
        for (&q, &j) in &self.couplings_hz {
            couplings.insert(q, hz(finite("couplings_hz", j)?));
        }
        let cfg = SpinChainConfig {
            n_qubits: self.n_qubits,
            target: self.target,
            bias: self.bias,
            couplings,
            bias_strength: hz(finite("bias_hz", self.bias_hz)?),
            coupling_scales: self.coupling_scales.clone(),
            detunings: self.detunings_hz.iter().map(|&v| hz(v)).collect(),
            j_max: hz(finite("j_max_hz", self.j_max_hz)?),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleFile {
    pub omega_i_hz: f64,
    pub omega_f_hz: f64,
    pub t_f_s: f64,
    pub n_segments: usize,
    /// Reference field of the ramp; the register's worst case when absent.
    pub x_ref_hz: Option<f64>,
    pub generator: Generator,
    pub quantization: Quantization,
}

impl Default for ScheduleFile {
    fn default() -> Self {
        Self {
            omega_i_hz: DEFAULT_OMEGA_I_HZ,
            omega_f_hz: DEFAULT_J_MAX_HZ,
            t_f_s: DEFAULT_T_F_S,
            n_segments: DEFAULT_SEGMENTS,
            x_ref_hz: None,
            generator: Generator::OdeFaquad,
            quantization: Quantization::PhaseBalanced,
        }
    }
}

impl ScheduleFile {
    pub fn to_spec(&self) -> Result<FaquadSpec<f64>> {
        let spec = FaquadSpec {
            omega_i: hz(self.omega_i_hz),
            omega_f: hz(self.omega_f_hz),
            t_f: self.t_f_s,
            x_ref: self.x_ref_hz.map(hz),
            n_segments: self.n_segments,
            generator: self.generator,
            quantization: self.quantization,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseFile {
    pub kind: NoiseKind,
    pub t2_s: f64,
    pub t2_overrides_s: BTreeMap<usize, f64>,
    pub representation: Representation,
    pub n_trajectories: usize,
}

impl Default for NoiseFile {
    fn default() -> Self {
        Self {
            kind: NoiseKind::None,
            t2_s: DEFAULT_T2_S,
            t2_overrides_s: BTreeMap::new(),
            representation: Representation::DensityMatrix,
            n_trajectories: 1000,
        }
    }
}

impl NoiseFile {
    pub fn dephasing(t2_s: f64) -> Self {
        Self {
            kind: NoiseKind::Dephasing,
            t2_s,
            ..Self::default()
        }
    }

    /// Trajectory sampling draws from `seed`.
    pub fn to_model(&self, seed: u64) -> NoiseModel<f64> {
        NoiseModel {
            kind: self.kind,
            t2: self.t2_s,
            t2_overrides: self.t2_overrides_s.clone(),
            representation: self.representation,
            n_trajectories: self.n_trajectories,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesFile {
    pub name: String,
    /// Bias coupling as a multiple of the register's `bias_hz`.
    pub theta_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGridFile {
    /// Points on the α ∈ [−1, 1] grid, per control state.
    pub n_alpha: usize,
    pub series: Vec<SeriesFile>,
    /// Scan control and bias together instead of the listed series.
    pub concurrent: bool,
}

impl Default for SweepGridFile {
    fn default() -> Self {
        let s = |name: &str, theta_scale| SeriesFile {
            name: name.into(),
            theta_scale,
        };
        Self {
            n_alpha: 21,
            series: vec![s("theta=0", 0.0), s("theta=+max", 1.0), s("theta=-max", -1.0)],
            concurrent: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepFile {
    pub register: RegisterFile,
    pub schedule: ScheduleFile,
    pub noise: NoiseFile,
    pub sweep: SweepGridFile,
    /// Binomial readout with this many shots per point.
    pub shots: Option<u64>,
}

fn default_j_max() -> f64 {
    DEFAULT_J_MAX_HZ
}
fn default_omega_i() -> f64 {
    DEFAULT_OMEGA_I_HZ
}
fn default_t_f() -> f64 {
    DEFAULT_T_F_S
}
fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub couplings_hz: Vec<f64>,
    #[serde(default)]
    pub bias_hz: f64,
    #[serde(default = "default_omega_i")]
    pub omega_i_hz: f64,
    #[serde(default = "default_j_max")]
    pub omega_f_hz: f64,
    #[serde(default = "default_t_f")]
    pub t_f_s: f64,
    #[serde(default = "default_segments")]
    pub n_segments: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_ref_hz: Option<f64>,
    #[serde(default)]
    pub generator: Generator,
    #[serde(default)]
    pub quantization: Quantization,
}

/// Serialized [`GateProgram`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramFile {
    pub layers: Vec<LayerFile>,
    pub j_max_hz: f64,
}

impl ProgramFile {
    pub fn to_program(&self) -> Result<GateProgram<f64>> {
        let n_controls = self.layers.first().map_or(0, |l| l.couplings_hz.len());
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            for &c in &l.couplings_hz {
                finite("couplings_hz", c)?;
            }
            layers.push(Layer {
                couplings: l.couplings_hz.iter().map(|&c| hz(c)).collect(),
                bias: hz(finite("bias_hz", l.bias_hz)?),
                schedule: FaquadSpec {
                    omega_i: hz(l.omega_i_hz),
                    omega_f: hz(l.omega_f_hz),
                    t_f: l.t_f_s,
                    x_ref: l.x_ref_hz.map(hz),
                    n_segments: l.n_segments,
                    generator: l.generator,
                    quantization: l.quantization,
                },
            });
        }
        let program = GateProgram {
            layers,
            n_controls,
            j_max: hz(finite("j_max_hz", self.j_max_hz)?),
        };
        program.validate()?;
        Ok(program)
    }

    pub fn from_program(program: &GateProgram<f64>) -> Self {
        Self {
            layers: program
                .layers
                .iter()
                .map(|l| LayerFile {
                    couplings_hz: l.couplings.iter().map(|c| c.hz()).collect(),
                    bias_hz: l.bias.hz(),
                    omega_i_hz: l.schedule.omega_i.hz(),
                    omega_f_hz: l.schedule.omega_f.hz(),
                    t_f_s: l.schedule.t_f,
                    n_segments: l.schedule.n_segments,
                    x_ref_hz: l.schedule.x_ref.map(|x| x.hz()),
                    generator: l.schedule.generator,
                    quantization: l.schedule.quantization,
                })
                .collect(),
            j_max_hz: program.j_max.hz(),
        }
    }

    /// Two-layer XNOR reference weights.
    pub fn xnor_reference() -> Self {
        let layer = |a: f64, b: f64| LayerFile {
            couplings_hz: vec![a, b],
            bias_hz: 0.0,
            omega_i_hz: DEFAULT_OMEGA_I_HZ,
            omega_f_hz: DEFAULT_J_MAX_HZ,
            t_f_s: DEFAULT_T_F_S,
            n_segments: DEFAULT_SEGMENTS,
            x_ref_hz: None,
            generator: Generator::OdeFaquad,
            quantization: Quantization::PhaseBalanced,
        };
        Self {
            layers: vec![layer(20.5, -26.5), layer(18.9, -32.1)],
            j_max_hz: DEFAULT_J_MAX_HZ,
        }
    }
}

fn default_xnor_noise() -> NoiseFile {
    NoiseFile::dephasing(DEFAULT_T2_S)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XnorFile {
    pub program: ProgramFile,
    #[serde(default = "default_xnor_noise")]
    pub noise: NoiseFile,
}

impl Default for XnorFile {
    fn default() -> Self {
        Self {
            program: ProgramFile::xnor_reference(),
            noise: default_xnor_noise(),
        }
    }
}

/// Truth table plus search constraints for weight synthesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeFile {
    /// Control bit string → desired target P₁.
    pub rows: BTreeMap<Bits, f64>,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_j_max")]
    pub j_max_hz: f64,
    #[serde(default = "default_omega_i")]
    pub omega_i_hz: f64,
    #[serde(default = "default_j_max")]
    pub omega_f_hz: f64,
    /// Search Ω_f of each layer within `[lo, hi]`.
    #[serde(default)]
    pub omega_f_range_hz: Option<[f64; 2]>,
    #[serde(default = "default_t_f")]
    pub t_f_s: f64,
    #[serde(default = "default_segments")]
    pub n_segments: usize,
    #[serde(default)]
    pub include_bias: bool,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_pool")]
    pub surrogate_pool: usize,
    #[serde(default)]
    pub noise: NoiseFile,
}

fn default_layers() -> usize {
    2
}
fn default_starts() -> usize {
    16
}
fn default_tolerance() -> f64 {
    1e-4
}
fn default_max_evals() -> usize {
    2000
}
fn default_pool() -> usize {
    512
}

impl OptimizeFile {
    pub fn xnor() -> Self {
        Self::for_table(&TruthTable::xnor())
    }

    pub fn for_table(table: &TruthTable) -> Self {
        Self {
            rows: table.rows.clone(),
            layers: default_layers(),
            j_max_hz: DEFAULT_J_MAX_HZ,
            omega_i_hz: DEFAULT_OMEGA_I_HZ,
            omega_f_hz: DEFAULT_J_MAX_HZ,
            omega_f_range_hz: None,
            t_f_s: DEFAULT_T_F_S,
            n_segments: DEFAULT_SEGMENTS,
            include_bias: false,
            starts: default_starts(),
            tolerance: default_tolerance(),
            max_evals: default_max_evals(),
            surrogate_pool: default_pool(),
            noise: NoiseFile::default(),
        }
    }

    pub fn table(&self) -> Result<TruthTable> {
        let n = self.rows.keys().next().map_or(0, Bits::len);
        TruthTable::new(n, self.rows.clone())
    }

    pub fn settings(&self, seed: u64) -> OptimizeSettings {
        OptimizeSettings {
            layers: self.layers,
            j_max: hz(self.j_max_hz),
            omega_i: hz(self.omega_i_hz),
            omega_f: hz(self.omega_f_hz),
            omega_f_range: self.omega_f_range_hz.map(|[lo, hi]| (hz(lo), hz(hi))),
            t_f: self.t_f_s,
            n_segments: self.n_segments,
            include_bias: self.include_bias,
            starts: self.starts,
            tolerance: self.tolerance,
            max_evals: self.max_evals,
            surrogate_pool: self.surrogate_pool,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseyFile {
    pub register: RegisterFile,
    /// Free-evolution time; the fringe shift 2JT must stay inside (−π, π].
    pub time_s: f64,
    pub n_phases: usize,
    /// Control whose coupling is measured; the first one when absent.
    pub control: Option<usize>,
    pub noise: NoiseFile,
    pub shots: Option<u64>,
}

impl Default for RamseyFile {
    fn default() -> Self {
        Self {
            register: RegisterFile::default(),
            time_s: 5e-3,
            n_phases: 24,
            control: None,
            noise: NoiseFile::default(),
            shots: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_domain_defaults() {
        let cfg = RegisterFile::default().to_config().unwrap();
        assert_eq!(cfg, SpinChainConfig::three_ion());
        let spec = ScheduleFile::default().to_spec().unwrap();
        assert_eq!(spec, FaquadSpec::standard(hz(DEFAULT_J_MAX_HZ)));
        let program = ProgramFile::xnor_reference().to_program().unwrap();
        assert_eq!(program, GateProgram::xnor_reference());
    }

    #[test]
    fn roundtrip_through_json() {
        let file = XnorFile::default();
        let text = serde_json::to_string(&file).unwrap();
        assert_eq!(from_json::<XnorFile>(&text).unwrap(), file);
        let opt = OptimizeFile::xnor();
        let text = serde_json::to_string(&opt).unwrap();
        assert_eq!(from_json::<OptimizeFile>(&text).unwrap(), opt);
        assert_eq!(opt.table().unwrap(), TruthTable::xnor());
    }

    #[test]
    fn missing_fields_are_named() {
        let err = from_json::<XnorFile>("{}").unwrap_err().to_string();
        assert!(err.contains("program"), "{err}");
        let err = from_json::<ProgramFile>(r#"{"layers": [{}], "j_max_hz": 37.5}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("couplings_hz"), "{err}");
        let err = from_json::<SweepFile>(r#"{"schedul": {}}"#).unwrap_err().to_string();
        assert!(err.contains("schedul"), "{err}");
    }

    #[test]
    fn partial_files_take_defaults() {
        let s: SweepFile = from_json(r#"{"schedule": {"t_f_s": 0.02}}"#).unwrap();
        assert_eq!(s.schedule.t_f_s, 0.02);
        assert_eq!(s.schedule.n_segments, DEFAULT_SEGMENTS);
        assert_eq!(s.sweep.series.len(), 3);
        let n: NoiseFile = from_json(r#"{"kind": "dephasing"}"#).unwrap();
        assert!(n.to_model(0).is_noisy());
        let g: ScheduleFile = from_json(r#"{"generator": "closed_form"}"#).unwrap();
        assert_eq!(g.generator, Generator::ClosedForm);
    }

    #[test]
    fn program_validation_runs_on_load() {
        let mut p = ProgramFile::xnor_reference();
        p.layers[1].couplings_hz.pop();
        assert!(p.to_program().is_err());
        p.layers.clear();
        assert!(p.to_program().is_err());
    }
}
