use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("spectral estimate vanishes at f = {frequency}; its logarithm is undefined")]
    DegenerateEstimate { frequency: f64 },

    #[error("halfwidth {h} is below the minimum of {min} (two grid spacings)")]
    BandwidthTooSmall { h: f64, min: f64 },

    #[error("smoothing window at f = {frequency} with halfwidth {h} crosses the declared boundary at {boundary}")]
    BoundaryReached {
        frequency: f64,
        h: f64,
        boundary: f64,
    },

    #[error("grid is degenerate: {0}")]
    Degenerate(String),

    #[error("no touch point for the boundary at {f_disc} within the search interval")]
    NoTouchPoint { f_disc: f64 },

    #[error("pipeline stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
