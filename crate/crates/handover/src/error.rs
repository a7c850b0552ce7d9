use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mobile terminal sits on base station {bs} at sample {n}")]
    ZeroDistance { bs: usize, n: usize },

    #[error("singular least-squares window: D - C^2 = {gap:e} (D = {d:e})")]
    SingularFit { gap: f64, d: f64 },

    #[error("covariance is not positive semidefinite: smallest eigenvalue {min_eig:e}")]
    NotPsd { min_eig: f64 },

    #[error("covariance is not positive definite: smallest eigenvalue {0:e}")]
    NotPositiveDefinite(f64),

    #[error("invalid event specification: {0}")]
    Event(String),

    #[error("conditioning on {side} has probability {value:e}, below 1e-9")]
    DegenerateConditioning { side: &'static str, value: f64 },

    #[error("horizon m = {0} exceeds the trellis enumeration limit of 12")]
    HorizonTooLong(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used in the CLI's JSON error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::ConfigParse(_) => "config",
            Error::ZeroDistance { .. } => "zero_distance",
            Error::SingularFit { .. } => "singular_fit",
            Error::NotPsd { .. } => "not_psd",
            Error::NotPositiveDefinite(_) => "not_positive_definite",
            Error::Event(_) => "event",
            Error::DegenerateConditioning { .. } => "degenerate_conditioning",
            Error::HorizonTooLong(_) => "horizon_too_long",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
