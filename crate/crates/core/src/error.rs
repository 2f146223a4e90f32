use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative order {order} exceeds the supported maximum {max}")]
    OrderOutOfRange { order: usize, max: usize },

    #[error("{what}: Newton iteration did not converge (last residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("vacuum reached: Bernoulli base {base:e} is not positive")]
    VacuumReached { base: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("mollifier width {epsilon} is below two grid spacings ({h})")]
    KernelUnderresolved { epsilon: f64, h: f64 },

    #[error("Courant number {courant:.4} exceeds the stability limit {limit:.4}")]
    CflViolation { courant: f64, limit: f64 },

    #[error("field norm grew by {growth:e} at time level {level}")]
    InstabilityDetected { level: usize, growth: f64 },

    #[error("operator is not hyperbolic: background r11 = {r11}")]
    NotHyperbolic { r11: f64 },

    #[error("grid too coarse for order-{order} differences along axis {axis} ({points} points)")]
    OrderUnavailable { order: usize, axis: usize, points: usize },

    #[error("Picard iteration stalled after {iterations} iterates (last ratio {ratio:.3e})")]
    NoConvergence { iterations: usize, ratio: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
