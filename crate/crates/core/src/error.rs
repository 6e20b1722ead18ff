use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("network syntax error: {0}")]
    Syntax(String),
    #[error("edge {edge} references unknown node {node}")]
    DanglingNode { edge: usize, node: usize },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: usize },
    #[error("edge {edge}: {reason}")]
    InvalidEdge { edge: usize, reason: String },
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("unknown edge {0}")]
    UnknownEdge(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("transport matrix has a non-real spectrum")]
    NonRealSpectrum,
    #[error("transport matrix is defective (incomplete eigenvector basis)")]
    DefectiveSpectrum,
    #[error("CFL violation: courant number {courant:.6} exceeds 1")]
    CflViolation { courant: f64 },
    #[error("parabolic stability violation: dt {dt:e} exceeds limit {limit:e}")]
    StabilityViolation { dt: f64, limit: f64 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("singular node system at node {node}")]
    SingularSystem { node: usize },
    #[error("invalid coupling matrix: {0}")]
    InvalidCoupling(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative initial density {value} on edge {edge}")]
    NegativeDensity { edge: usize, value: f64 },
    #[error("solver became unstable at step {step} (t = {time:e}) on edge {edge}")]
    Unstable { step: u64, time: f64, edge: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
