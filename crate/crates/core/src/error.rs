use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("basis dimension {dim} exceeds the configured cap {cap}")]
    SizeCap { dim: usize, cap: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian at iteration {0}")]
    SingularJacobian(usize),
}

impl Error {
    /// Short machine-readable category, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::InvalidInput(_) | Error::Contract(_) => "input",
            Error::SizeCap { .. } => "size",
            Error::NoConvergence { .. } | Error::SingularJacobian(_) => "numerical",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
