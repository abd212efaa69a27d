use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("an instance needs at least two communities, got {0}")]
    TooFewCommunities(usize),
    #[error("community {0} has size zero")]
    EmptyCommunity(usize),
    #[error("largest community size {0} is shared by several communities")]
    TiedMode(u64),
    #[error("community indices must differ (got {0} twice)")]
    SamePair(usize),
    #[error("community index {index} out of range for {k} communities")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("statistic needs at least one observation")]
    NoObservations,
    #[error(
        "identity-based statistic is inactive: t = {t} does not exceed sum(S) + K(t) = {boundary}"
    )]
    Inactive { t: u64, boundary: u64 },
    #[error("pair ({a}, {b}) needs S_a >= S_b for the constrained supremum")]
    PairOrder { a: usize, b: usize },
    #[error("integral term needs d >= S (d = {d}, S = {s})")]
    BelowSupport { d: f64, s: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inconsistent observation state: {0}")]
    InconsistentState(String),
    #[error("unknown built-in instance `{0}`")]
    UnknownInstance(String),
    #[error("trace has no identity information at epoch {0}")]
    MissingIdentity(u64),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
