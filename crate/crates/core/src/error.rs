use thiserror::Error;

use crate::net::{IntersectionId, SegmentId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("speed set must be non-empty and strictly positive")]
    InvalidSpeedSet,
    #[error("segment {0} has no entry in the effective speed map")]
    MissingSpeed(SegmentId),
    #[error("unknown intersection {0}")]
    UnknownIntersection(IntersectionId),
    #[error("unknown segment {0}")]
    UnknownSegment(SegmentId),
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("operation requires a grid network")]
    NotAGrid,
    #[error("source {0} is not inside any γ-rate cell")]
    SourceUncovered(IntersectionId),
    #[error("destination {0} is not inside any γ-rate cell")]
    DestinationUncovered(IntersectionId),
    #[error("no route from {src} to {dst} at γ = {gamma} Mbps")]
    NoRoute {
        src: IntersectionId,
        dst: IntersectionId,
        gamma: f64,
    },
    #[error("road `{road}` crosses cell `{cell}` whose flow per channel is zero")]
    Infeasible { road: String, cell: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for the routing failures that a γ fallback may cure.
    pub fn is_routing_failure(&self) -> bool {
        matches!(
            self,
            Error::SourceUncovered(_) | Error::DestinationUncovered(_) | Error::NoRoute { .. }
        )
    }
}
