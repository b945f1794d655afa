use thiserror::Error;

/// Errors raised by the porting library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("value count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("non-numeric token {token:?} at position {position}")]
    NonNumericToken { token: String, position: usize },
    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("duplicate knot abscissa {0}")]
    DuplicateKnot(f64),
    #[error("invalid knots: {0}")]
    InvalidKnots(String),
    #[error("knot set is empty")]
    EmptyKnots,
    #[error("interval {interval} has only {available} knots in its neighborhood, 4 required")]
    InsufficientKnots { interval: usize, available: usize },

    #[error("too sparse: {0}")]
    TooSparse(String),
    #[error("Catmull-Rom needs a regular rectangular grid: {0}")]
    IrregularGrid(String),
    #[error("point ({x}, {y}) lies outside the raster")]
    OutOfBounds { x: f64, y: f64 },

    #[error("cell ({i}, {j}) outside a {n}x{m} hexagonal grid")]
    OutOfRange { i: usize, j: usize, n: usize, m: usize },
    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("no overlap between the square and hexagonal domains")]
    EmptyOverlap,
    #[error("degradation constraint infeasible: {0}")]
    ConstraintInfeasible(String),
    #[error("raster geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("non-finite water state at cell ({i}, {j}) after step {step}")]
    NonFiniteState { i: usize, j: usize, step: usize },
    #[error("invalid flow parameter: {0}")]
    InvalidFlowParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
