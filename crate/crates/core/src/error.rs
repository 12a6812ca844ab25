use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Nonpositive density or pressure. Location is filled in by the
    /// spatial operator; time and step by the driver.
    #[error(
        "invalid state (density {density:e}, pressure {pressure:e}) at element {element}, node {node}{}",
        context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default()
    )]
    InvalidState {
        element: usize,
        node: usize,
        density: f64,
        pressure: f64,
        context: Option<String>,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("field file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach time/stage context to an invalid-state error.
    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::InvalidState {
                element,
                node,
                density,
                pressure,
                context,
            } => {
                let ctx = ctx.into();
                Error::InvalidState {
                    element,
                    node,
                    density,
                    pressure,
                    context: Some(match context {
                        Some(c) => format!("{c}; {ctx}"),
                        None => ctx,
                    }),
                }
            }
            other => other,
        }
    }
}
