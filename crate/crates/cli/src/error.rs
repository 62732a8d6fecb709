use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(skinbath::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration and output-location problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<skinbath::Error> for CliError {
    fn from(e: skinbath::Error) -> Self {
        use skinbath::Error as E;
        match e {
            E::NonFinite { .. }
            | E::StepLimit { .. }
            | E::StepUnderflow { .. }
            | E::BranchAmbiguous { .. }
            | E::SingularContour { .. }
            | E::SingularPivot { .. } => CliError::Numerical(e),
            other => CliError::Config(other.to_string()),
        }
    }
}
