use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the documented domain (index out of range, size mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant failed validation (non-unitary matrix, bad group table, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// The post-selected branch has (numerically) zero probability.
    #[error("post-selection impossible: success probability {probability:e}{}", context_suffix(.context))]
    PostSelectionImpossible {
        probability: f64,
        context: Option<String>,
    },

    /// A numerical cross-check failed (e.g. two gradient estimates disagree).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn context_suffix(context: &Option<String>) -> String {
    match context {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}

impl Error {
    pub fn post_selection(probability: f64) -> Self {
        Error::PostSelectionImpossible {
            probability,
            context: None,
        }
    }

    /// Attaches a context string to a post-selection failure; other variants pass through.
    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::PostSelectionImpossible { probability, .. } => Error::PostSelectionImpossible {
                probability,
                context: Some(ctx.into()),
            },
            other => other,
        }
    }

    pub fn is_post_selection(&self) -> bool {
        matches!(self, Error::PostSelectionImpossible { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
