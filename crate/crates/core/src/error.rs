use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("representative overflowed at eps = {eps:e}")]
    OverflowAtSample { eps: f64 },

    #[error("slope fit did not converge: {0}")]
    NonConvergentFit(String),

    #[error("representative evaluation failed at eps = {eps:e}")]
    EvaluationFailed { eps: f64 },

    #[error("unknown preset tag `{0}`")]
    UnknownTag(String),

    #[error("quadrature failed to reach tolerance {tolerance:e} (last estimate {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("point x = {x} (eps = {eps:e}) outside the admissible domain")]
    DomainError { x: f64, eps: f64 },

    #[error("square root of negative value {value:e} at x = {x}")]
    SqrtOfNegative { x: f64, value: f64 },

    #[error("no nonnegativity certificate: {0}")]
    CertificateViolation(String),

    #[error("node cannot be differentiated: {0}")]
    NonDifferentiableNode(String),

    #[error("root search failed: {0}")]
    SearchFailure(String),

    #[error("shooting did not connect the far-field states: {0}")]
    NoConnection(String),

    #[error("stiff integration failed: {0}")]
    StiffnessFailure(String),

    #[error("CFL condition violated: {cfl} > {limit}")]
    CflViolation { cfl: f64, limit: f64 },

    #[error("blow-up detected: |u| = {value:e} at t = {t}")]
    BlowupDetected { t: f64, value: f64 },

    #[error("stability constraint violated: {0}")]
    StabilityViolation(String),

    #[error("nonlinear solve failed: {0}")]
    NonlinearSolveFailure(String),

    #[error("mode {mode} overflows at t = {t}")]
    OverflowForLargeMode { mode: usize, t: f64 },

    #[error("Riemann solver failed at interface {interface}: {reason}")]
    SolverFailure { interface: usize, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
