use plasma_shock::ShockError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("no downstream state: {0}")]
    NoDownstream(String),
    #[error("no connection: {0}")]
    NoConnection(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::NoDownstream(_) => 3,
            CliError::NoConnection(_) => 4,
        }
    }
}

impl From<ShockError> for CliError {
    fn from(e: ShockError) -> Self {
        let msg = e.to_string();
        match e {
            ShockError::InvalidParameter { .. } | ShockError::DegenerateSpecies(_) | ShockError::NotRestPoint(_) => {
                CliError::Config(msg)
            }
            ShockError::NoRestPoints { .. } => CliError::NoDownstream(msg),
            ShockError::NoConnection { .. } | ShockError::NoUnstableDirection => CliError::NoConnection(msg),
            _ => CliError::Numeric(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numeric(format!("summary serialization: {e}"))
    }
}
