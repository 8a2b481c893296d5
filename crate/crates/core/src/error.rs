use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("state outside the domain: {0}")]
    Domain(String),

    #[error("integration blew up at t = {t}: (s, i, gamma) = ({s}, {i}, {gamma})")]
    IntegrationBlowup { t: f64, s: f64, i: f64, gamma: f64 },

    #[error("{what} too short: need at least {needed}, got {got}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid range for {name}: [{lo}, {hi}]")]
    InvalidRange {
        name: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 = usage / validation, 3 = numeric failure, 4 = I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::Domain(_)
            | Error::InvalidRange { .. }
            | Error::Config(_) => 2,
            Error::IntegrationBlowup { .. } | Error::TooShort { .. } | Error::Empty(_) => 3,
            Error::Parse { .. } | Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 4,
        }
    }
}
