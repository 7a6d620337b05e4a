use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("state (rho={rho}, q={q}) lies outside the model domain ({context})")]
    OutOfDomain { rho: f64, q: f64, context: &'static str },
    #[error("velocity is undefined at rho=0 for the pressure-law model")]
    UndefinedVelocity,
    #[error("degenerate jump: left and right densities coincide")]
    DegenerateJump,
    #[error("marker {0} outside [w_minus, w_plus]")]
    MarkerRange(f64),
    #[error("implicit solve failed: {0}")]
    SolveFailure(String),
    #[error("{0} requires intersecting phases (V_c = V_f)")]
    RequiresIntersecting(&'static str),
    #[error("{0} requires non-intersecting phases (V_c < V_f)")]
    RequiresDisjoint(&'static str),
    #[error("constraint flux {0} outside (0, V_f * sigma_f_plus)")]
    ConstraintRange(f64),
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error("event budget exhausted after {events} events at t={time}")]
    EventOverflow { events: usize, time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
