use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid quadrature bounds [{lower}, {upper}] with {order} nodes")]
    InvalidBounds { lower: f64, upper: f64, order: usize },

    #[error("squeezing parameter q = {0} must lie in (0, 1)")]
    SqueezingOutOfRange(f64),

    #[error("reflectance r = {0} must lie in [0, 1)")]
    ReflectanceOutOfRange(f64),

    #[error("dimension must be at least 1")]
    EmptyDimension,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state has zero norm")]
    ZeroState,

    #[error("cat state amplitude must be nonzero")]
    ZeroAmplitude,

    #[error("coherent amplitude |alpha|^2 = {mean_photons} loses weight {lost:e} to truncation at dimension {dim}")]
    TruncationExceeded {
        mean_photons: f64,
        lost: f64,
        dim: usize,
    },

    #[error("cannot detect {detected} photons from a {available}-photon Fock state")]
    TooManyPhotons { detected: usize, available: usize },

    #[error("outcome has zero probability density")]
    ZeroProbability,

    #[error("outcome grid captures {captured} of expected weight {expected}; loss exceeds {tolerance:e}")]
    GridTruncation {
        captured: f64,
        expected: f64,
        tolerance: f64,
    },

    #[error("density matrix trace {0} is not unity")]
    TraceNotUnity(f64),

    #[error("no interior local maximum in quadrature distribution")]
    NoFringe,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("malformed state document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
