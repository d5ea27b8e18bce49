//! Error types shared across the toolbox.

use thiserror::Error;

/// Errors produced by operators, solvers, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or invalid configuration: mismatched grids, bad stage
    /// plans, unknown config keys, out-of-range parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid runtime input: non-finite data, dimension mismatches,
    /// negative attenuation values.
    #[error("input error: {0}")]
    Input(String),

    /// A solver iterate became non-finite.
    #[error("divergence in stage {stage}, iteration {iteration}: {detail}")]
    Divergence {
        stage: usize,
        iteration: usize,
        detail: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config/input, 3 divergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input(_) => 2,
            Error::Divergence { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
