use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the core library.
///
/// Every variant maps to a stable machine-readable category (see
/// [`Error::category`]) that the command-line front end prints on failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("label {label} out of range for {class_count} classes (sample {id})")]
    Label {
        id: String,
        label: usize,
        class_count: usize,
    },

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid architecture: {0}")]
    Spec(String),

    #[error("layer {0} is not a convolution layer")]
    Layer(usize),

    #[error("invalid wavelet scale {0}")]
    Scale(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("empty batch")]
    EmptyBatch,

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short, stable identifier used in single-line error reports.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::Shape(_) => "ShapeError",
            Error::Label { .. } => "LabelError",
            Error::EmptyClass(_) => "EmptyClass",
            Error::Config(_) => "ConfigError",
            Error::Spec(_) => "SpecError",
            Error::Layer(_) => "LayerError",
            Error::Scale(_) => "ScaleError",
            Error::EmptyInput(_) => "EmptyInput",
            Error::EmptyBatch => "EmptyBatch",
            Error::Divergence { .. } => "DivergenceError",
            Error::Dataset(_) => "DatasetError",
            Error::Io { .. } => "IoError",
            Error::Json(_) => "ParseError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
