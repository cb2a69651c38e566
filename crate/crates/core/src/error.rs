use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config key `{key}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    ConfigKey {
        key: String,
        line: Option<usize>,
        message: String,
    },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric divergence at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },

    #[error("generation {generation}: {source}")]
    Generation {
        generation: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config_key(key: &str, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::ConfigKey {
            key: key.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by the user's configuration rather than by the run.
    pub fn is_configuration(&self) -> bool {
        match self {
            Error::Config(_) | Error::ConfigKey { .. } => true,
            Error::Stage { source, .. } | Error::Generation { source, .. } => source.is_configuration(),
            _ => false,
        }
    }
}
