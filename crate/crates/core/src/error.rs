use thiserror::Error;

/// Errors produced by the solvers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Newton iteration for the stationary HJB equation did not reach tolerance.
    #[error("newton solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The order parameter vanishes so no rotation is singled out.
    #[error("alignment is degenerate: order parameter {g:.3e} is numerically zero")]
    DegenerateAlignment { g: f64 },

    /// The backward sweep stayed unstable after every allowed time-step halving.
    #[error("time step rejected after {halvings} halvings (dt = {dt:.3e})")]
    StepRejected { halvings: usize, dt: f64 },

    /// The damped Picard iteration stopped making progress.
    #[error("picard iteration stagnated after {} iterations (last residual {:.3e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    PicardStagnation { history: Vec<f64> },

    #[error("decay-rate window is degenerate: {0}")]
    WindowDegenerate(String),

    /// `kappa_c - 2 lambda rho` must stay positive for the weighted norms to be bounded.
    #[error("lambda = {lambda} is too large: {reason}")]
    LambdaTooLarge { lambda: f64, reason: String },

    #[error("horizon {horizon} too short: discounted tail {tail:.3e} exceeds tolerance {tol:.3e}")]
    HorizonTooShort { horizon: f64, tail: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
