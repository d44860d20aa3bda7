use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Malformed file content. `line` is 1-based when the input is line oriented.
    #[error("format error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format {
        line: Option<usize>,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("activation cache does not belong to the current model state")]
    StaleCache,

    #[error("training diverged in epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("localization map is constant; kurtosis is undefined")]
    DegenerateMap,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(line: impl Into<Option<usize>>, message: impl Into<String>) -> Self {
        Error::Format {
            line: line.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable name of the error variant, used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput(_) => "EmptyInput",
            Error::Format { .. } => "FormatError",
            Error::Config(_) => "ConfigError",
            Error::Shape(_) => "ShapeError",
            Error::StaleCache => "StaleCacheError",
            Error::Divergence { .. } => "DivergenceError",
            Error::DegenerateMap => "DegenerateMap",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io { .. } => "IoError",
        }
    }
}
