use crate::config::ConfigError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad or inconsistent command-line arguments.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] hetcast_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// 2 for usage and input-format problems, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        use hetcast_core::Error as Core;
        match self {
            Error::Usage(_) | Error::Config(_) => 2,
            Error::Core(
                Core::Usage(_) | Core::InvalidScenario(_) | Core::InvalidDistribution(_),
            ) => 2,
            _ => 1,
        }
    }
}
