//! Error type shared across the library.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid grid density: {0}")]
    InvalidGrid(String),

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Lipschitz certificate violated: |f(x)-f(y)| = {observed} > |x-y| = {allowed}")]
    LipschitzViolation { observed: f64, allowed: f64 },

    #[error("transport LP failed to converge after {iterations} pivots")]
    LpStalled { iterations: usize },

    #[error("support too large for the LP path: {size} > {max}")]
    SupportTooLarge { size: usize, max: usize },

    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),

    #[error("coefficient returned a non-finite value at sample {sample}: t={t}, x={x:?}, r={r}")]
    NonFiniteCoefficient {
        sample: usize,
        t: f64,
        x: Vec<f64>,
        r: f64,
    },

    #[error("non-finite particle state at index {index} (t={t}): {state:?}")]
    NonFiniteState {
        index: usize,
        t: f64,
        state: Vec<f64>,
    },

    #[error("initial density has zero mass")]
    ZeroMassDensity,

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("advective CFL violated: |b| dt/dx = {value} > 1 at t={t}")]
    CflViolation { value: f64, t: f64 },

    #[error("density went negative beyond tolerance: min = {min} at t={t}")]
    NegativeDensity { min: f64, t: f64 },

    #[error("under-resolved kernel: cell width {cell_width} must be < 1/(2n) = {limit}")]
    UnderResolvedKernel { cell_width: f64, limit: f64 },

    #[error("diffusion must be a constant scalar multiple of the identity for this check")]
    NonConstantSigma,

    #[error("dense per-particle paths were not retained; rerun with dense paths enabled")]
    DensePathsMissing,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("empty particle cloud")]
    EmptyCloud,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
}
