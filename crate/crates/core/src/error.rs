use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("value {value} outside the support of the {family} family")]
    Support { family: &'static str, value: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("centralization is undefined for a single agent")]
    UndefinedCentralization,

    #[error("influence matrix is reducible or periodic: {0}")]
    ReducibleOrPeriodic(String),

    #[error(
        "infeasible constraint: beta > theta / (1 - omega) has no solution for omega = {omega}"
    )]
    InfeasibleConstraint { omega: f64 },

    #[error("perfect separation: coefficient {name} diverged (|beta| > {limit})")]
    Separation { name: String, limit: f64 },

    #[error("design matrix is rank deficient (collinear columns)")]
    Collinearity,

    #[error("degenerate tasks with zero error variance or fewer than two trials: {}", .0.join(", "))]
    DegenerateTask(Vec<String>),

    #[error("insufficient design: {0}")]
    InsufficientDesign(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
