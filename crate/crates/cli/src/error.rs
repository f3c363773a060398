use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    /// 1 for numerical failures, 2 for usage, config and I/O problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> CliError {
        CliError::Io { path: path.into(), source }
    }
}

impl From<fieldbridge::MeshError> for CliError {
    fn from(e: fieldbridge::MeshError) -> Self {
        CliError::Config(e.to_string())
    }
}
