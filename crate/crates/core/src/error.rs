use thiserror::Error;

/// Errors produced by evaluators, residual suites and solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid argument (order out of range, bad sample count, malformed config).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Elementary function applied outside its domain (sqrt of non-positive
    /// constant term, reciprocal of zero, ...).
    #[error("domain error in {what}: offending value {value}")]
    Domain { what: &'static str, value: f64 },

    /// mu(t) vanished where a profile division was requested.
    #[error("singular profile: mu(t) = 0 at t = {t}")]
    SingularProfile { t: f64 },

    /// Gamma <= 0: the evaluation point lies outside the regularity domain.
    #[error("outside regularity domain: Gamma = {gamma}")]
    OutsideRegularity { gamma: f64 },

    /// Q <= 0: the orthonormal coframe does not exist at this point.
    #[error("frame domain error: Q = {q}")]
    FrameDomain { q: f64 },

    /// A chain identity could not be formed because its denominator underflowed.
    #[error("singular identity {name}: denominator {denom}")]
    SingularIdentity { name: &'static str, denom: f64 },

    /// Iterative solver failed to reach the requested residual.
    #[error("solver did not converge: residual {residual} after {iterations} iterations")]
    SolverDiverged {
        residual: f64,
        iterations: usize,
        history: Vec<f64>,
    },

    /// Requested computation path is not available for this field provider.
    #[error("unsupported path: {0}")]
    UnsupportedPath(&'static str),

    /// Connection/curvature operations are restricted to Euclidean signature.
    #[error("epsilon = {eps} not supported for this operation (Euclidean only)")]
    EpsilonUnsupported { eps: i8 },
}

pub type Result<T> = std::result::Result<T, Error>;
