use thiserror::Error;

/// Errors produced by the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (non-finite input, invalid geometry, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature routine did not reach the requested tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A requested allocation exceeds the configured resource cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Measured data violated a contract (monotonicity, normalization, empty signal).
    #[error("data error: {0}")]
    Data(String),

    /// A frame file could not be parsed; `offset` is the byte position of the failure.
    #[error("malformed frame file at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
