use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    ConfigSyntax { origin: String, message: String },

    #[error("invalid value for `{field}`: {message}")]
    ConfigValue { field: String, message: String },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Physics(#[from] siphon_core::Error),

    #[error("{0} of {1} acceptance criteria failed")]
    Selftest(usize, usize),
}

impl CliError {
    /// 2 for bad configuration or input, 3 for physics the model rejects,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigSyntax { .. } | Self::ConfigValue { .. } | Self::Input { .. } => 2,
            Self::Physics(_) => 3,
            Self::Io { .. } | Self::Selftest(..) => 1,
        }
    }
}
