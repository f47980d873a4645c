use thiserror::Error;

use phcomm_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("scenario `{id}`: {source}")]
    Scenario {
        id: String,
        #[source]
        source: Box<CliError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn in_scenario(self, id: &str) -> Self {
        CliError::Scenario {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    /// Process exit status: 2 configuration, 3 stability, 4 divergence,
    /// 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                CoreError::Config(_) | CoreError::InvalidParams(_) | CoreError::Domain(_) => 2,
                CoreError::Stability { .. } => 3,
                CoreError::Divergence { .. } => 4,
                CoreError::NoSignal { .. } => 1,
            },
            CliError::Scenario { source, .. } => source.exit_code(),
            CliError::Io(_) => 1,
        }
    }
}
