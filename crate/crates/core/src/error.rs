use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("CNOT layer touches qubit {0} more than once")]
    OverlappingPairs(usize),

    #[error("invalid Pauli label {0:?}")]
    InvalidPauliLabel(String),

    #[error("Pauli strings support at most {max} qubits, got {n}")]
    TooManyQubits { n: usize, max: usize },

    #[error("group members are not qubit-wise commuting")]
    NotQubitWiseCommuting,

    #[error("{what} on {n} qubits exceeds the configured limit of {limit}")]
    SizeLimit {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("Kraus operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("alpha = {alpha} keeps no samples out of {shots}; need at least {required} shots")]
    TooFewSamples {
        alpha: f64,
        shots: u64,
        required: u64,
    },

    #[error("noise term with w = {0} is not invertible")]
    NonInvertible(f64),

    #[error("layout does not match polynomial: {0}")]
    LayoutMismatch(String),

    #[error("feasibility filter violated: h({bitstring}) = {value} outside [{lower}, {upper}]")]
    FilterViolation {
        bitstring: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// True for refusals caused by resource limits rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::SizeLimit { .. } | Error::TooManyQubits { .. })
    }
}
