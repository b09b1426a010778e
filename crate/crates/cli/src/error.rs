use consensus_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid job spec: {0}")]
    Schema(String),
    #[error("graph is disconnected ({0} components)")]
    Disconnected(usize),
    #[error("too many states: {0}")]
    Blowup(CoreError),
    #[error("{0}")]
    Residual(String),
    #[error("trajectory blew up at t = {0}")]
    BlewUp(f64),
    #[error("demo assertions failed:\n{0}")]
    DemoFailed(String),
    #[error(transparent)]
    Core(CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Json(_) => 2,
            CliError::Disconnected(_) => 3,
            CliError::Blowup(_) => 4,
            CliError::Residual(_) => 5,
            CliError::BlewUp(_) => 6,
            CliError::DemoFailed(_) => 7,
            CliError::Core(_) | CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Disconnected { components } => CliError::Disconnected(components),
            CoreError::CombinatorialBlowup { .. } => CliError::Blowup(e),
            CoreError::ResidualTooLarge(r) => {
                CliError::Residual(format!("state is not an equilibrium (residual {r:e})"))
            }
            e => CliError::Core(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
