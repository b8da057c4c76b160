use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model spec: {0}")]
    Spec(String),

    #[error("size {0} is too small to scale parameters (need ln(size) > 0)")]
    DegenerateSize(f64),

    #[error("index error: {0}")]
    Index(String),

    #[error("a set of {size} nodes contains no hyperedge of cardinality {h}")]
    EmptySupport { size: usize, h: usize },

    #[error("exhaustive search over {candidates} subsets exceeds the budget of {budget}")]
    Budget { candidates: u128, budget: u128 },

    #[error("k = {k} must be smaller than M = {m}")]
    AlphaOutOfRange { m: usize, k: usize },

    #[error("gamma = {0} lies on a branch boundary where the asymptotics are undefined")]
    BoundaryGamma(f64),

    #[error("coverage group is degenerate: floor(({n} - {k}) / ({k} - {m})) = {groups}")]
    DegenerateCoverage { n: usize, k: usize, m: usize, groups: usize },

    #[error("recovery curve never crosses 0.5")]
    NoCrossing,

    #[error("no failures observed at any size; failure exponent is at least {bound:.4}")]
    ExponentLowerBoundOnly { bound: f64 },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }

    pub(crate) fn index(msg: impl Into<String>) -> Self {
        Error::Index(msg.into())
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Spec(_) | Error::Index(_) => 2,
            Error::Budget { .. }
            | Error::DegenerateSize(_)
            | Error::DegenerateCoverage { .. }
            | Error::AlphaOutOfRange { .. }
            | Error::EmptySupport { .. } => 3,
            Error::Io(_) => 4,
            Error::Trial { source, .. } => source.exit_code(),
            Error::BoundaryGamma(_) | Error::NoCrossing | Error::ExponentLowerBoundOnly { .. } => 1,
        }
    }
}
