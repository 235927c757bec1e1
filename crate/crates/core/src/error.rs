use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at tape record {index} ({op})")]
    Numeric { index: usize, op: &'static str },

    #[error("training diverged at step {step}: loss {loss}, parameter norm {param_norm}")]
    Diverged {
        step: usize,
        loss: f64,
        param_norm: f64,
    },

    #[error("resolution {given} too small (need at least {required})")]
    Resolution { given: usize, required: usize },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by floating-point blow-up rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric { .. } | Error::Diverged { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
