use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("tensor product dimension {0} exceeds the 2^16 limit")]
    DimensionOverflow(usize),

    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("invalid qubit list: {0}")]
    InvalidQubits(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("trace {0} differs from 1")]
    BadTrace(f64),

    #[error("state vector has zero norm")]
    ZeroNorm,

    #[error("value {value} for {name} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("Kraus operators are not complete (residual {0:.3e})")]
    IncompleteChannel(f64),

    #[error("invalid noise model: {0}")]
    InvalidNoiseModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("reset never succeeds (success probability {p_success:.3e})")]
    ResetNeverSucceeds { p_success: f64 },

    #[error("no probe order satisfies the reset property")]
    NoValidProbeOrder,

    #[error("incomplete tomography data: {0}")]
    IncompleteTomography(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("projection did not converge after {iterations} iterations (psd residual {psd_residual:.3e}, tp residual {tp_residual:.3e})")]
    NotConverged {
        iterations: usize,
        psd_residual: f64,
        tp_residual: f64,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
