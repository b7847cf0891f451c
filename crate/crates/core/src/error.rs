//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// The coupling has reached the value at which the lower canonical mode
    /// softens to zero frequency; the quadratic form is no longer positive.
    #[error("coupling g = {g:.6} GHz at or above critical value g_c = {g_c:.6} GHz")]
    CriticalCouplingExceeded { g: f64, g_c: f64 },

    /// Non-degenerate perturbation theory hit a coupled pair of levels closer
    /// than the tolerance.
    #[error(
        "near-degenerate coupled levels {i} and {j}: |gap| = {gap:.3e} < tol = {tol:.3e} rad/ns"
    )]
    Degeneracy { i: usize, j: usize, gap: f64, tol: f64 },

    /// The integrator step does not resolve the fastest oscillation present.
    #[error("step dt = {dt:.3e} ns exceeds resolution bound {bound:.3e} ns")]
    StepSizeTooLarge { dt: f64, bound: f64 },

    /// Hermiticity or trace drift grew past 100x its budget during a run.
    #[error("non-physical state at t = {t:.3} ns: {what}")]
    NonPhysicalState { t: f64, what: String },

    /// Steady-state denominators vanish when the two diagonal feeding
    /// coefficients coincide; flags an unphysical rate configuration.
    #[error("Lambda^(2,2)_(1,1) equals Lambda^(1,1)_(1,1); steady-state formulas are singular")]
    DivisionHazard,

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
