use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid of {requested} nodes exceeds the cap of {cap}")]
    GridTooLarge { requested: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("negative time t = {0}")]
    NegativeTime(f64),

    #[error("time t = {0} must be positive")]
    NonPositiveTime(f64),

    #[error("time t = {t} is below the resolvable threshold {t_min} = (10h)^2")]
    TimeBelowResolvable { t: f64, t_min: f64 },

    #[error("time step dt = {dt} exceeds the accuracy budget dt_max = h = {h}")]
    TimeStepTooLarge { dt: f64, h: f64 },

    #[error("operation requires an unmasked field")]
    MaskedField,

    #[error("field length {got} does not match grid size {expected}")]
    FieldLength { got: usize, expected: usize },

    #[error("non-finite value at node {0}")]
    NonFiniteValue(usize),

    #[error("convex body is invalid: {0}")]
    InvalidBody(String),

    #[error("convex body has empty interior on the grid")]
    EmptyInterior,

    #[error("discrete interior splits into {0} connected components")]
    DisconnectedInterior(usize),

    #[error("smoothing radius delta = {delta} violates delta < r/4 = {limit} for inradius r")]
    DeltaTooLarge { delta: f64, limit: f64 },

    #[error("point is not on the body boundary (gauge value {0})")]
    NotOnBoundary(f64),

    #[error("outward normal undefined: {0} active faces meet at the query point")]
    CornerNormal(usize),

    #[error("gauge gradient norm {0} below threshold; point lies on a corner or inside the recession cone")]
    DegenerateGradient(f64),

    #[error("ray from the center never leaves the body within the search range")]
    UnboundedRay,

    #[error("no boundary points inside the clipping ball of radius {0}")]
    NoBoundaryInClip(f64),

    #[error("jump interface lies outside the body at {0:?}")]
    InterfaceOutsideBody([f64; 3]),

    #[error("test field rejected: {0}")]
    InvalidTestField(String),

    #[error("mollification radius {radius} falls below the grid spacing {h}; refine the grid")]
    MollifierBelowGrid { radius: f64, h: f64 },

    #[error("conditional expectation requires 1 <= m < dim, got m = {m}, dim = {dim}")]
    InvalidProjection { m: usize, dim: usize },

    #[error("{context}: solver stalled after {iterations} iterations (residual {residual:.3e})")]
    SolverStall {
        context: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("unsupported in dimension {dim}: {what}")]
    UnsupportedDimension { dim: usize, what: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
