use std::path::{Path, PathBuf};

/// CLI failures. Usage and config problems map to exit code 1; failed
/// numerical checks are reported separately and map to 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown preset {0:?}; run `lgtweezer presets` for the list")]
    UnknownPreset(String),
    #[error("reference table: {0}")]
    Reference(String),
    #[error(transparent)]
    Core(#[from] lgtweezer::Error),
}

impl CliError {
    pub fn config(path: &str, message: &str) -> Self {
        CliError::Config {
            path: if path.is_empty() { ".".into() } else { path.into() },
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
