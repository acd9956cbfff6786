use std::path::PathBuf;

/// Errors produced anywhere in the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid scenario, optics, or handover configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Mirror steering is impossible because an endpoint lies behind the wall.
    #[error("infeasible steering: {0}")]
    InfeasibleSteering(String),

    /// A chip sequence whose length is not a multiple of the spreading factor.
    #[error("framing error: sequence of {len} chips is not a multiple of SF={sf}")]
    Framing { len: usize, sf: usize },

    /// Exhaustive assignment would exceed the enumeration budget.
    #[error("brute force needs {needed} assignments (limit {limit}); use coordinate ascent")]
    EnumerationGuard { needed: f64, limit: u64 },

    /// Training diverged.
    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },

    /// Malformed model, dataset, or table file.
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

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

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
