use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimension must be 1, 2 or 3 (got {0})")]
    BadDimension(usize),
    #[error("points per axis must be a power of two and at least 8 (got {0})")]
    BadResolution(usize),
    #[error("box length must be positive and finite (got {0})")]
    BadBoxLength(f64),
    #[error("multi-index {index:?} out of range for a {dim}-d grid with {points} points per axis")]
    IndexOutOfRange {
        index: Vec<usize>,
        dim: usize,
        points: usize,
    },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field and operator live on different grids")]
    GridMismatch,
    #[error("field and operator use different domain masks")]
    MaskMismatch,
    #[error("the spectral transform is not defined for masked fields")]
    MaskedTransform,
    #[error("operation requires a field in {expected:?} space")]
    WrongSpace { expected: crate::field::Space },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("symbol `{label}` is not finite at eigenvalue {eigenvalue}")]
    NonFiniteSymbol { label: String, eigenvalue: f64 },
    #[error("potential must be real and non-negative; value {value} at index {index}")]
    NegativePotential { index: usize, value: f64 },
    #[error("dense eigendecomposition is limited to {limit} unknowns (got {size})")]
    TooLarge { size: usize, limit: usize },
    #[error("domain mask selects no points")]
    EmptyMask,
    #[error("height {height} must exceed the mean of |f| over the whole space ({mean})")]
    HeightTooLow { height: f64, mean: f64 },
    #[error("data point ({x}, {y}) is not strictly positive")]
    NonPositiveData { x: f64, y: f64 },
    #[error("need at least {needed} data points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("symbol `{0}` has unbounded support")]
    UnboundedSupport(String),
    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
