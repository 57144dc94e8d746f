use thiserror::Error;

/// Errors raised anywhere in the smoothing engine.
#[derive(Error, Debug)]
pub enum Error {
    #[error("empty domain: x_min ({x_min}) must be strictly less than x_max ({x_max})")]
    EmptyDomain { x_min: f64, x_max: f64 },

    #[error("unsupported degree {0}: only quadratic (2) and cubic (3) bases are available")]
    UnsupportedDegree(usize),

    #[error("too few segments: nseg = {0}, need at least 3")]
    TooFewSegments(usize),

    #[error("point {value} at index {index} is outside the domain [{x_min}, {x_max}]")]
    OutOfDomain {
        index: usize,
        value: f64,
        x_min: f64,
        x_max: f64,
    },

    #[error("size {m} too small: need at least {min}")]
    SizeTooSmall { m: usize, min: usize },

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("too few observations: n = {n}, need more than {min}")]
    TooFewObservations { n: usize, min: usize },

    #[error("matrix is not positive definite (failing pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("dense coefficient matrix is not positive definite")]
    DenseNotPositiveDefinite,

    #[error("nonpositive residual variance estimate ({value}); data interpolated exactly or degenerate")]
    NonpositiveSigma { value: f64 },

    #[error("likelihood evaluated to a non-finite value at lambda = {lambda}")]
    NonFiniteLikelihood { lambda: f64 },

    #[error("invalid search bracket: lo = {lo} must be below hi = {hi}")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("coefficient reconstruction called with mismatched transformation kind or sizes")]
    KindMismatch,

    #[error(
        "Currie-Durban baseline at m = {m} needs about {mib} MiB of dense storage; \
         use the mmb method for problems this large"
    )]
    CdProblemTooLarge { m: usize, mib: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
