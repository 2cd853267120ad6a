use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node index {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),

    #[error("probability {name} = {value} outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("{name} = {value} is invalid: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("matrix size {0} is not a power of two")]
    SizeNotPowerOfTwo(usize),

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {delta:e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },

    #[error("expected {expected} values, got {got} ({context})")]
    LengthMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("qubit {qubit} out of range for {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("control and target both refer to qubit {0}")]
    ControlEqualsTarget(usize),

    #[error("decomposition has no terms")]
    EmptyDecomposition,

    #[error("state is not normalized: |norm - 1| = {0:e}")]
    NotNormalized(f64),

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("embedding dimension {d} must be in 1..{max} for a {size}x{size} matrix")]
    DimensionOutOfRange { d: usize, max: usize, size: usize },

    #[error("ancilla register of {0} qubits is not supported here (expected 1 or 2)")]
    UnsupportedAncillaCount(usize),

    #[error("objective returned a non-finite value at evaluation {eval}")]
    NonFiniteObjective { eval: usize },

    #[error("no labeled nodes in {0} set")]
    EmptyNodeSet(&'static str),

    #[error("node {0} has no label")]
    MissingLabel(usize),

    #[error("label {label} for node {node} is not binary")]
    NonBinaryLabel { node: usize, label: i64 },

    #[error("malformed {what} at line {line}: {detail}")]
    Malformed {
        what: &'static str,
        line: usize,
        detail: String,
    },

    #[error("missing artifact {path}: run the `{stage}` stage first")]
    MissingArtifact { path: PathBuf, stage: &'static str },

    #[error("{0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
