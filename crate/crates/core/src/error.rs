use thiserror::Error;

use crate::gauss::GaussInt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("constellation parameter M={0} must be even and at least 2")]
    InvalidConstellation(u32),

    #[error("symbol {symbol} is not in the {m}x{m} QAM constellation")]
    NotInConstellation { symbol: GaussInt, m: u32 },

    #[error("filter is not monic: leading tap is {0}")]
    NotMonic(String),

    #[error("filter is not minimum phase (largest zero magnitude {0:.12})")]
    NotMinimumPhase(f64),

    #[error("polynomial root finding did not converge")]
    RootFinding,

    #[error("filter has a zero on the unit circle (|z| = {0:.12}); it is not invertible")]
    NotInvertible(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid filter pattern: {0}")]
    Pattern(String),

    #[error("sliced symbol at position {pos} lies outside the constellation")]
    OutOfConstellation { pos: usize },

    #[error("malformed tail record: {0}")]
    TailFormat(String),

    #[error("heap is empty")]
    EmptyHeap,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
