use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit label {0} appears more than once")]
    LabelCollision(u8),

    #[error("qubit {0} is not part of the register")]
    UnknownQubit(u8),

    #[error("register of {0} qubits exceeds the supported maximum of {max}", max = crate::kernel::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("partial trace must keep at least one qubit")]
    EmptyKeep,

    #[error("measurement branch has probability {0:.3e}, below the forcing threshold")]
    ZeroProbabilityBranch(f64),

    #[error("operator support {0:?} is outside the allowed qubits")]
    InvalidSupport(Vec<u8>),

    #[error("Pauli error has weight {0}, only weight ≤ 1 is supported")]
    WeightTooHigh(usize),

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("missing probe state {0}")]
    MissingProbe(String),

    #[error("trace of χ matrix is zero")]
    ZeroTrace,

    #[error("empty histogram")]
    EmptyHistogram,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems map to exit code 1 in the CLI, everything else
    /// to exit code 2.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse(_) | Error::Json(_))
    }
}
