//! Error type shared by every module of the simulator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Two points that must be distinct coincide (or a vector has zero length).
    #[error("degenerate geometry in {op}: {msg}")]
    DegenerateGeometry { op: &'static str, msg: String },

    /// Scenario or model configuration is invalid.
    #[error("invalid configuration field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    TrainingDivergence { epoch: usize },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("all path powers underflowed to zero")]
    PowerUnderflow,

    #[error("sequencing error: {0}")]
    Sequencing(String),

    /// A geometry error raised while generating the channel at a given time index.
    #[error("geometry error at sample {index} (t = {time_s} s): {source}")]
    AtSample {
        index: usize,
        time_s: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn degenerate(op: &'static str, msg: impl Into<String>) -> Self {
        Error::DegenerateGeometry { op, msg: msg.into() }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// True for errors that come from channel geometry rather than configuration.
    pub fn is_geometry(&self) -> bool {
        matches!(
            self,
            Error::DegenerateGeometry { .. } | Error::AtSample { .. } | Error::PowerUnderflow
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
