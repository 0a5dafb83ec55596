use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] mfgraph::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("validation failed:\n{0}")]
    Validation(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 2 validation, 3 budget, 4 numerical, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use mfgraph::Error as E;
        match self {
            CliError::Config(_) | CliError::Validation(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidModel(_) | E::InvalidArgument(_) | E::Reducible { .. } | E::Json(_) => 2,
                E::Budget { .. } => 3,
                E::StepSize { .. } | E::Numerical(_) | E::CeilingExceeded { .. } | E::Closure { .. } | E::OutOfRange { .. } => 4,
                E::Io(_) => 1,
            },
            CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
