use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("complement of the open set is empty; no Whitney decomposition exists")]
    ComplementEmpty,

    #[error("enlargement parameter {0} violates (1+eps)^2 < 5/4")]
    InadmissibleEpsilon(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid open set: {0}")]
    InvalidSet(String),

    #[error("point lies outside every enlarged cube; partition of unity undefined there")]
    UndefinedRegion,

    #[error("point depends on cubes beyond the truncation generation (gamma = {gamma:.3e}, collar = {collar:.3e})")]
    TruncationCollar { gamma: f64, collar: f64 },

    #[error("eta schedule is not admissible at cube {cube}: eta = {eta:e}, bound = {bound:e}")]
    InadmissibleEta { cube: usize, eta: f64, bound: f64 },

    #[error("halving cap exceeded for cubes {cubes:?}")]
    IterationCap { cubes: Vec<usize> },

    #[error("function has no declared support box")]
    MissingSupport,

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration errors: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
