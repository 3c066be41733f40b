use std::path::PathBuf;

/// Failures surfaced by the command line, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad arguments or inconsistent inputs (exit 2).
    #[error("{0}")]
    Validation(String),

    /// A generator could not produce a model (exit 3).
    #[error("generation failed: {0}")]
    Generation(String),

    /// Reading or writing a file failed (exit 4).
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was readable but its contents do not parse.
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse { .. } => 2,
            Error::Generation(_) => 3,
            Error::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Parse { path: path.into(), reason: reason.to_string() }
    }
}

impl From<scmgen_core::Error> for Error {
    fn from(e: scmgen_core::Error) -> Self {
        use scmgen_core::Error as C;
        match e {
            C::Unstable { .. } | C::RetriesExhausted { .. } | C::DegenerateDraw { .. } | C::Numerical(_) => {
                Error::Generation(e.to_string())
            }
            _ => Error::Validation(e.to_string()),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
