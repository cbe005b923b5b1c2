use thiserror::Error;

/// Errors surfaced by world construction, the broadcast log, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent. `field` names the
    /// offending config path (e.g. `world.k`).
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("world construction failed after {attempts} attempts: {reason}")]
    WorldConstruction { attempts: usize, reason: String },

    #[error("user {user} already published at step {step}")]
    DuplicatePublish { user: usize, step: u64 },

    #[error("invalid action set for user {user}: {reason}")]
    InvalidActions { user: usize, reason: String },

    /// Peer reward statistics were requested under a regime that withholds them.
    #[error("disclosure violation: {0}")]
    Disclosure(String),

    #[error("mismatched replication grids: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
