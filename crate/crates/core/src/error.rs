use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("singular at the origin: {0}")]
    SingularOrigin(String),
    #[error("negative input: {0}")]
    NegativeInput(String),
    #[error("measure not normalized")]
    NotNormalized,
    #[error("drift condition fails: {0}")]
    ConditionFails(String),
    #[error("potential is not convex: {0}")]
    NotConvex(String),
    #[error("hypothesis fails: {0}")]
    HypothesisFails(String),
    #[error("no tightening available: {0}")]
    NoTightening(String),
    #[error("degenerate rate function: {0}")]
    DegenerateRate(String),
    #[error("unsupported F: {0}")]
    UnsupportedF(String),
    #[error("weight is not eventually monotone: {0}")]
    NonMonotoneWeight(String),
    #[error("set has too much mass: {0}")]
    MassTooLarge(String),
    #[error("exponential moment K diverges for every alpha tried")]
    DivergentK,
    #[error("time step too large: {0}")]
    StabilityViolation(String),
    #[error("function is not Lipschitz for the weighted metric: {0}")]
    LipschitzViolation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
