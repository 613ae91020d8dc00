use std::path::PathBuf;

/// Process-level errors; each maps to one of the documented exit codes.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Bad flags, malformed manifests or config files. Exit code 1.
    #[error("configuration error: {0}")]
    Config(String),

    /// Filesystem failures. Exit code 2.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or truncated video payloads. Exit code 2.
    #[error("decode error in {path}: {message}")]
    Decode { path: PathBuf, message: String },

    /// Failures from the numeric core. Exit code 3 except for parameter
    /// and shape violations, which are usage errors.
    #[error(transparent)]
    Core(#[from] stevq_core::Error),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn decode(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Decode {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 0 success; 1 usage/config; 2 i/o or decode; 3 numerical/solver.
    pub fn exit_code(&self) -> i32 {
        use stevq_core::Error as CoreError;
        match self {
            AppError::Config(_) => 1,
            AppError::Io { .. } | AppError::Decode { .. } => 2,
            AppError::Core(core) => match core {
                CoreError::InvalidParameter(_)
                | CoreError::DimensionMismatch(_)
                | CoreError::Scale(_) => 1,
                _ => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
