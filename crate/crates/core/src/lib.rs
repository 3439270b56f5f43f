//! Simulation of adiabatic quantum-perceptron gates on trapped-ion spin
//! chains: Hamiltonian construction, ramp schedules, noisy propagation,
//! single-gate experiments and small layered networks.
//!
//! Everything is generic over the scalar type through [`Real`]; the type
//! aliases below fix `f64`, which is what the I/O layer uses.

// `!(x > 0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod evolve;
pub mod gate;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod network;
pub mod optimize;
pub mod record;
pub mod scalar;
pub mod schedule;
pub mod seeding;
pub mod state;
pub mod units;

pub use config::{NoiseKind, NoiseModel, Representation, SpinChainConfig};
pub use error::{Error, Result};
pub use evolve::{propagate_piecewise, ForwardModel};
pub use gate::{run_perceptron_gate, PerceptronGateSpec};
pub use hamiltonian::{activation, build_hamiltonian, Hamiltonian};
pub use network::{GateProgram, NetworkModel, TruthTable};
pub use record::ExperimentRecord;
pub use scalar::Real;
pub use schedule::{FaquadSpec, Generator, PulseSchedule, Quantization};
pub use state::{Bits, RegisterState};
pub use units::AngularFrequency;

pub type Freq = AngularFrequency<f64>;
pub type Config = SpinChainConfig<f64>;
pub type Noise = NoiseModel<f64>;
pub type State = RegisterState<f64>;
pub type Schedule = PulseSchedule<f64>;
pub type Spec = FaquadSpec<f64>;

pub type Freq32 = AngularFrequency<f32>;
pub type Config32 = SpinChainConfig<f32>;
pub type State32 = RegisterState<f32>;
pub type Schedule32 = PulseSchedule<f32>;
