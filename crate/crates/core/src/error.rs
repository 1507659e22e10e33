use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("support of size {size} is rank deficient (conditioning ratio {ratio:.3e})")]
    RankDeficient { size: usize, ratio: f64 },

    #[error("enumeration of C({n}, {order}) = {count} supports exceeds the limit of {limit}")]
    TooLarge {
        n: usize,
        order: usize,
        count: u128,
        limit: u128,
    },

    #[error("bad arguments: {0}")]
    BadArguments(String),

    #[error("column {0} is identically zero after redraw")]
    DegenerateColumn(usize),

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(what: impl Into<String>) -> Error {
    Error::DimensionMismatch(what.into())
}

pub(crate) fn bad_args(what: impl Into<String>) -> Error {
    Error::BadArguments(what.into())
}
