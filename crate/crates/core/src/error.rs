//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("parse error in {path}, line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("no candidate survived the CNR threshold")]
    NoSurvivor,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("mitigation solver did not converge within {max_iter} iterations (residual {residual:.3e})")]
    Convergence { max_iter: usize, residual: f64 },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("degenerate distribution: total weight {0:.3e} is numerically zero")]
    DegenerateDistribution(f64),

    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),
}

impl Error {
    /// Process exit code for the CLI: 2 input error, 3 empty result,
    /// 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoSurvivor => 3,
            Error::Numerical(_)
            | Error::Convergence { .. }
            | Error::DegenerateDistribution(_) => 4,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
