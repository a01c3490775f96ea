//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Outgoing inertial velocity does not exceed the racket velocity; the
    /// impact equation has no forward solution and the fixed rule
    /// `(t, w) -> (t, w)` applies instead.
    #[error("grazing impact at t={t}: outgoing velocity {w} <= racket velocity {racket_velocity}")]
    GrazingImpact { t: f64, w: f64, racket_velocity: f64 },

    /// The bracketing scan found no sign change below the a-priori flight
    /// bound. A root is guaranteed to exist there, so this is an internal bug.
    #[error("impact solver found no sign change from t={t}, w={w} (internal bug)")]
    SolverFailure { t: f64, w: f64 },

    /// The implicit-function denominator of the impact equation vanished.
    #[error("implicit differentiation singular at impact time {t_next}")]
    SingularImplicitSystem { t_next: f64 },

    /// An iterated state left the computable domain (relative velocity
    /// dropped to zero or below).
    #[error("orbit left the domain at step {step}: relative velocity {v}")]
    DomainExit { step: usize, v: f64 },

    /// A time pair does not describe a genuine free-fall arc.
    #[error("inadmissible segment ({t0}, {t1}): {reason}")]
    InadmissibleSegment { t0: f64, t1: f64, reason: String },

    /// Newton iteration stagnated before reaching the residual target.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Newton matrix is numerically singular. Expected along a degenerate
    /// curve of fixed points, where the linearization has a zero eigenvalue.
    #[error("singular Newton matrix (condition estimate {cond:.3e})")]
    SingularJacobian { cond: f64 },

    /// The minimax string collapsed onto one of its endpoints, which signals
    /// a degenerate (non-isolated) critical set rather than a saddle.
    #[error("minimax path collapsed onto an endpoint")]
    PathCollapse,

    /// Fixed-point candidates were detected at the resolution limit of the
    /// sweep grid.
    #[error("sweep grid too coarse: {0}")]
    GridTooCoarse(String),

    /// Run-configuration validation failure.
    #[error("config error: {0}")]
    Config(String),
}
