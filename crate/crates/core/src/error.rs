use std::path::PathBuf;

/// Errors raised anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cell ({i}, {j}) lies outside the weight window")]
    OutOfWindow { i: i64, j: i64 },

    #[error("window overflow: {0}")]
    WindowOverflow(String),

    #[error("degenerate tie between the two clusters at ({i}, {j})")]
    DegenerateTie { i: i64, j: i64 },

    #[error("horizon {requested} exceeds the computed range (last time {available})")]
    InsufficientHorizon { requested: f64, available: f64 },

    #[error("argument {0} outside the supported numeric range")]
    Range(f64),

    #[error("quadrature order {0} is below the minimum of 8")]
    Accuracy(usize),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
