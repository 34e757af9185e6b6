use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown map `{0}`")]
    UnknownMap(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("observable `{0}` is not a monotone combination")]
    NotMonotoneCombination(String),
    #[error("transfer decay does not converge (fitted rate {0})")]
    NoDecay(f64),
    #[error("degenerate variance: {0}")]
    Degenerate(String),
    #[error("law is not centered (mean {0:e})")]
    Uncentered(f64),
    #[error("negative atom weight {0}")]
    NegativeWeight(f64),
    #[error("density vanishes at {0}")]
    ZeroDensity(f64),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::UnknownMap(_) => "unknown_map",
            Error::UnknownObservable(_) => "unknown_observable",
            Error::NotMonotoneCombination(_) => "not_monotone_combination",
            Error::NoDecay(_) => "no_decay",
            Error::Degenerate(_) => "degenerate",
            Error::Uncentered(_) => "uncentered",
            Error::NegativeWeight(_) => "negative_weight",
            Error::ZeroDensity(_) => "zero_density",
            Error::Config(_) => "invalid_config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
