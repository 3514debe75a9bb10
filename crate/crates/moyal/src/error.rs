//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by lattice construction, state builders, dynamics and
/// estimators.
#[derive(Debug, Error)]
pub enum Error {
    /// Lattice parameters violate an invariant (power-of-two size, positive
    /// ħ, non-degenerate interval).
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    /// A phase-space point's position component does not sit on the
    /// half-grid of pair midpoints.
    #[error("q0 = {q0} is not on the half-grid (nearest point {nearest}, spacing {spacing})")]
    OffHalfGrid { q0: f64, nearest: f64, spacing: f64 },

    /// The requested state cannot be resolved on this lattice.
    #[error("unresolvable state: {0}")]
    UnresolvableState(String),

    /// Mismatched lattices or incompatible grid shapes between operands.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An operation that needs a physical (positive, trace-class) density
    /// was handed a singular non-state kernel.
    #[error("operator is not a physical state: {0}")]
    NotAState(String),

    /// The evolved observable escaped the resolved box before the requested
    /// time; `t_escape` is the last usable time.
    #[error("observable escaped the lattice box at t = {t_escape:.6} (requested t = {t_requested:.6})")]
    Escape { t_escape: f64, t_requested: f64 },

    /// Exponent fit window is empty, too short, or contains invalid samples.
    #[error("invalid fit window: {0}")]
    FitWindow(String),

    /// The classical integrator could not meet its error target.
    #[error("integrator step failure: {0}")]
    StepFailure(String),

    /// Configuration value failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
