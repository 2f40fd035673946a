use thiserror::Error;

/// Failure classes with stable process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Core(#[from] fbm_stm_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for configuration and validation problems, 3 for numerical
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;
    use fbm_stm_core::Error;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::config("fbm.hurst", "missing").exit_code(), 2);
        assert_eq!(CliError::from(Error::Domain("x")).exit_code(), 2);
        let solve = Error::ImplicitSolveFailure {
            step: 3,
            iterations: 200,
            residual: 1.0,
        };
        assert_eq!(CliError::from(solve.clone()).exit_code(), 3);
        let wrapped = Error::PathFailure {
            stream_id: 7,
            source: Box::new(solve),
        };
        assert_eq!(CliError::from(wrapped).exit_code(), 3);
        let io = std::io::Error::other("disk");
        assert_eq!(CliError::io("out/x.csv", io).exit_code(), 1);
    }
}
