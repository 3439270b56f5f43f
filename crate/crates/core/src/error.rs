use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("{n_qubits} qubits exceeds the dense limit of {limit}")]
    TooLarge { n_qubits: usize, limit: usize },

    #[error("invalid bit string {input:?}: {reason}")]
    BitString { input: String, reason: String },

    #[error("degenerate point: drive and field both vanish")]
    Degenerate,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("wrong state representation: {0}")]
    Representation(String),

    #[error("fringe fit failed: {0}")]
    FitFailed(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
