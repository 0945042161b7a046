use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid value for {flag}: {message}")]
    Usage { flag: &'static str, message: String },
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Compute(#[from] lpvar_core::Error),
}

impl CliError {
    /// Process exit status for this failure. Status 1 is reserved for a
    /// verification run whose criteria did not all pass.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Compute(_) => 4,
        }
    }
}
