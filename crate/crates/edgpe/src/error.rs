//! Error taxonomy shared across the toolkit.
//!
//! Variants map one-to-one onto the CLI exit codes documented in
//! [`crate::config`]: solver non-convergence (2), spreading evidence (3),
//! under-resolved propagation (4), usage errors (64) and configuration
//! errors (65).

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, EdgpeError>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum EdgpeError {
    /// Model parameters violate the admissibility constraints
    /// (λ₃ > 0, p ∈ (4, 6], nondegeneracy of (λ₁, λ₂)).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An operation received an argument outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Iteration budget exhausted before the convergence test held.
    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },

    /// Gradient flow drove A → 0 with E → 0⁺: evidence that no minimizer
    /// exists at this mass (spreading), not a numerical failure.
    #[error("spreading detected: A = {a:.3e}, E = {e:.3e}")]
    BlowdownDetected { a: f64, e: f64 },

    /// Conservation drift exceeded the configured tolerance during
    /// propagation, indicating an under-resolved run.
    #[error("under-resolved propagation at t = {t}: {what} drift {drift:.3e} exceeds {tol:.3e}")]
    UnderResolved {
        t: f64,
        what: &'static str,
        drift: f64,
        tol: f64,
    },

    /// A field became non-finite during time stepping.
    #[error("numerical overflow at t = {t}")]
    NumericalOverflow { t: f64 },

    /// Bisection endpoints contradict the bracketing predicate.
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    /// Configuration file failed validation; lists every violation.
    #[error("configuration rejected:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    /// Snapshot or trace serialization failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed snapshot file.
    #[error("bad snapshot: {0}")]
    BadSnapshot(String),
}

impl EdgpeError {
    /// Process exit code for the CLI, per the documented convention.
    pub fn exit_code(&self) -> i32 {
        match self {
            EdgpeError::NonConvergence { .. } => 2,
            EdgpeError::BlowdownDetected { .. } => 3,
            EdgpeError::UnderResolved { .. } | EdgpeError::NumericalOverflow { .. } => 4,
            EdgpeError::Config(_) | EdgpeError::InvalidParams(_) => 65,
            _ => 1,
        }
    }
}
