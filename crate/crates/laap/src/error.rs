use std::path::PathBuf;

use laap_core::Error as CoreError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data { .. } | CliError::Parse { .. } | CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter { .. } => 2,
                CoreError::Diverged { .. }
                | CoreError::NonConvergence { .. }
                | CoreError::NonStationary { .. }
                | CoreError::ZeroVariance => 4,
                CoreError::EmptySeries
                | CoreError::NonFinite { .. }
                | CoreError::InsufficientData { .. }
                | CoreError::ShapeMismatch { .. }
                | CoreError::NoTrueEvents => 3,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::data("a.csv", "missing").exit_code(), 3);
        let diverged = CoreError::Diverged {
            epoch: 3,
            last_finite_loss: Some(0.1),
        };
        assert_eq!(CliError::from(diverged).exit_code(), 4);
        let invalid = CoreError::InvalidParameter {
            name: "alpha",
            reason: "bad".into(),
        };
        assert_eq!(CliError::from(invalid).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::EmptySeries).exit_code(), 3);
    }
}
