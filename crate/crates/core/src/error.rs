use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("breakpoint lists differ in length ({knots} knots, {values} values)")]
    LengthMismatch { knots: usize, values: usize },
    #[error("at least two breakpoints are required, got {0}")]
    TooFewBreakpoints(usize),
    #[error("knots must start at 0, first knot is {0}")]
    NonzeroStart(String),
    #[error("knots must be strictly increasing (index {index})")]
    NonIncreasingKnots { index: usize },
    #[error("non-finite breakpoint at index {index}")]
    NonFinite { index: usize },
    #[error("a cumulative function must start at 0, got {0}")]
    NonzeroOrigin(String),
    #[error("a cumulative function must be nondecreasing (index {index})")]
    DecreasingValues { index: usize },
    #[error("horizons differ: {0} vs {1}")]
    HorizonMismatch(String, String),
    #[error("time {t} outside the domain [0, {horizon}]")]
    OutOfDomain { t: String, horizon: String },
    #[error("interval endpoints out of order: s = {s} > t = {t}")]
    ReversedInterval { s: String, t: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => unreachable!(),
            },
            _ => Error::Parse(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Parse(e.to_string())
        }
    }
}
