//! Error types shared by all cfolab modules.

use std::fmt;

/// Partial estimation state attached to an ambiguity failure so callers can
/// still inspect what the FCFO stage saw.
#[derive(Debug, Clone)]
pub struct AmbiguityInfo {
    /// Integer CFO that was already locked in before the FCFO stage failed.
    pub icfo: i64,
    /// Equivalent CFOs recovered from the selected polynomial roots.
    pub betas: Vec<f64>,
    /// Human-readable reason.
    pub reason: String,
}

impl fmt::Display for AmbiguityInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (icfo={}, betas={:?})",
            self.reason, self.icfo, self.betas
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid system or run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Shape or precondition mismatch between values that are otherwise valid.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An iterative kernel failed to converge or a matrix was unusable.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Structurally degenerate input (e.g. the zero polynomial).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The FCFO window rule could not produce an estimate.
    #[error("ambiguous estimate: {0}")]
    Ambiguity(Box<AmbiguityInfo>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed frame file, config file or JSON payload.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
