use thiserror::Error;

/// Errors produced by geometry validation, distribution parameters,
/// tape arithmetic, and the training loops.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is off the manifold: |<z,z>_L + 1| = {violation:.3e} exceeds {tol:.1e}")]
    OffManifold { violation: f64, tol: f64 },

    #[error("vector is not tangent at its base point: |<mu,v>_L| = {violation:.3e} exceeds {tol:.1e}")]
    NotTangent { violation: f64, tol: f64 },

    #[error("tangent vector has negative squared norm <u,u>_L = {value:.3e}")]
    NonSpacelike { value: f64 },

    #[error("degenerate parallel transport: alpha + 1 = {value:.3e}")]
    DegenerateTransport { value: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("arithmetic domain error at tape node {node}: {context}")]
    ArithmeticDomain { node: usize, context: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
