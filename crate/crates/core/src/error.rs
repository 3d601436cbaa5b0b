use thiserror::Error;

use crate::graph::{Edge, GridPoint};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("NonPositiveWeight: {edge} weight at ({}, {}) evaluates to {value}", at.h, at.t)]
    NonPositiveWeight {
        edge: Edge,
        at: GridPoint,
        value: String,
    },

    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),

    #[error("UnreachablePair: ({}, {}) does not precede ({}, {})", from.h, from.t, to.h, to.t)]
    UnreachablePair { from: GridPoint, to: GridPoint },

    #[error("TooLarge: n = {n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },

    #[error("OutsideSupport: state ({}, {}) is outside the support of the measure", at.h, at.t)]
    OutsideSupport { at: GridPoint },

    #[error("KernelOutOfSupport: a chain reached ({}, {}) where the kernel is undefined", at.h, at.t)]
    KernelOutOfSupport { at: GridPoint },

    #[error("NotBalanced: w0 + w1 differs between ({}, {}) and ({}, {})", .witness.0.h, .witness.0.t, .witness.1.h, .witness.1.t)]
    NotBalanced { witness: (GridPoint, GridPoint) },

    #[error("NotHarmonic: residual {residual} at ({}, {})", at.h, at.t)]
    NotHarmonic { at: GridPoint, residual: f64 },

    #[error("LevelMismatch: terminals at levels {0} and {1}")]
    LevelMismatch(usize, usize),

    #[error("HorizonMismatch: need horizon {needed}, have {available}")]
    HorizonMismatch { needed: usize, available: usize },

    #[error("DivergentCase: {0}")]
    DivergentCase(String),

    #[error("TruncationFailure: truncation bound {bound:e} cannot reach tolerance {tol:e}")]
    TruncationFailure { bound: f64, tol: f64 },

    #[error("NotAMixture: {0}")]
    NotAMixture(String),

    #[error("SequenceExhausted: index {index} is beyond the {len} values of the sequence file")]
    SequenceExhausted { index: usize, len: usize },

    #[error("UnsupportedFamily: {0}")]
    UnsupportedFamily(String),

    #[error("Parse: {0}")]
    Parse(String),

    #[error("IO: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) => 1,
            Error::TruncationFailure { .. } => 3,
            _ => 2,
        }
    }
}
