use thiserror::Error;

/// Curve construction, validation and re-centering failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CurveError {
    #[error("invalid curve parameter: {0}")]
    InvalidParameter(String),
    #[error("validation grid of {0} nodes is too small (need at least 256)")]
    GridTooSmall(usize),
    #[error("radial function is not positive at phi = {phi}: r = {value}")]
    NonPositiveRadius { phi: f64, value: f64 },
    #[error("curve is not strictly convex at phi = {phi}: chi = {value} (threshold {threshold})")]
    NotStrictlyConvex { phi: f64, value: f64, threshold: f64 },
    #[error("new origin ({x}, {y}) is not strictly inside the curve")]
    OriginOutside { x: f64, y: f64 },
    #[error(
        "Fourier refit residual {residual:e} exceeds {limit:e} on a {grid}-node grid; \
         raise the grid size or lower the coefficient cutoff"
    )]
    RefitResidual { residual: f64, limit: f64, grid: usize },
    #[error("curve file: {0}")]
    Spec(String),
}

/// Failures of the geometric billiard map.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum MapError {
    #[error("point ({x}, {y}) is not strictly outside the curve")]
    InsideCurve { x: f64, y: f64 },
    #[error("tangency root not bracketed in [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },
    #[error("tangency refinement stalled with residual {residual:e}")]
    Refinement { residual: f64 },
    #[error("finite-difference stencil of size {h} leaves the exterior")]
    StencilInside { h: f64 },
    #[error("orbit aborted at step {step}: {source}")]
    Orbit {
        step: usize,
        #[source]
        source: Box<MapError>,
    },
}

/// Failures of the chord/angle chart conversion and the map solved through `S`.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ChartError {
    #[error("angle pair ({phi0}, {phi1}) violates phi0 < phi1 < phi0 + pi")]
    InvalidAnglePair { phi0: f64, phi1: f64 },
    #[error("chord solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("phase point (p = {p}, phi = {phi}) is not outside the curve")]
    InsideCurve { p: f64, phi: f64 },
    #[error("could not bracket the image angle for (p = {p}, phi = {phi})")]
    Bracketing { p: f64, phi: f64 },
}

/// Jacobi-field machinery failures (minimality failures are findings, not errors).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum JacobiError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("Hopf field did not converge by window {window}: last iterates {previous} and {last}")]
    HopfNonConvergence { window: usize, previous: f64, last: f64 },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SantaloError {
    #[error("Santalo point search did not converge after {evaluations} evaluations (simplex diameter {diameter:e})")]
    NonConvergence { evaluations: usize, diameter: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Crate-level error with the process exit code each class maps to.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Santalo(#[from] SantaloError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// 2 invalid curve, 3 dynamics failure, 4 optimizer failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Curve(_) | Error::Config(_) => 2,
            Error::Map(_) | Error::Chart(_) | Error::Jacobi(_) => 3,
            Error::Santalo(SantaloError::Curve(_)) => 2,
            Error::Santalo(_) => 4,
            Error::Io(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
