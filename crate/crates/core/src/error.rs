use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("empty basis: max_lambda {0} is below the first eigenvalue 4π²")]
    EmptyBasis(f64),
    #[error("unregularized diagonal divergence: epsilon = 0 requires an explicit max_lambda")]
    UnregularizedDiagonal,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("representation requires positive temperature (beta = {0})")]
    NonPositiveTemperature(f64),
    #[error("insufficient samples: {got} < {need}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("insufficient effective samples: ess = {0:.1}")]
    InsufficientEffectiveSamples(f64),
    #[error("test function has nonzero spatial mean {0:e}")]
    NonzeroMean(f64),
    #[error("integration diverged at step {0}")]
    Diverged(usize),
    #[error("schedule defined only for m < 2 (m = {0})")]
    ScheduleUndefined(f64),
    #[error("test function depends on gamma")]
    GammaDependent,
    #[error("aliasing: grid of {grid} points cannot resolve wavenumber {kmax}")]
    Aliasing { grid: usize, kmax: i32 },
    #[error("density has negative value {0}")]
    NegativeDensity(f64),
    #[error("invalid prior spec {0:?}")]
    PriorSpec(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl Error {
    /// Stable snake_case tag used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyBasis(_) => "empty_basis",
            Error::UnregularizedDiagonal => "unregularized_diagonal",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NonPositiveTemperature(_) => "non_positive_temperature",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::InsufficientEffectiveSamples(_) => "insufficient_effective_samples",
            Error::NonzeroMean(_) => "nonzero_mean",
            Error::Diverged(_) => "diverged",
            Error::ScheduleUndefined(_) => "schedule_undefined",
            Error::GammaDependent => "gamma_dependent",
            Error::Aliasing { .. } => "aliasing",
            Error::NegativeDensity(_) => "negative_density",
            Error::PriorSpec(_) => "prior_spec",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
