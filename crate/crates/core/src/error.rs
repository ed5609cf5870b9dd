use std::path::PathBuf;

/// Errors surfaced by the tracking, generation and benchmark layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// 2x2 system cannot be solved: |det| fell below the scale-invariant
    /// guard `guard * trace^2`.
    #[error("singular hessian (det {det:.6e}, trace {trace:.6e})")]
    SingularHessian { det: f64, trace: f64 },

    /// All second derivatives vanished; the normalized Newton Hessian is
    /// undefined.
    #[error("degenerate hessian: second-derivative energy is zero")]
    DegenerateHessian,

    /// Fewer than three non-collinear points: no convex hull exists.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl std::fmt::Display, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
