//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the analysis pipeline.
///
/// Validation errors carry the measured defect so callers can report how far
/// an input was from meeting its contract, not just that it failed.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or register dimensions do not match what the operation needs.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A matrix that must be Hermitian deviates from its adjoint.
    #[error("matrix not Hermitian in {context}: max |A - A^dag| = {deviation:.3e}")]
    NotHermitian { context: &'static str, deviation: f64 },

    /// A matrix that must be positive semidefinite has a negative eigenvalue.
    #[error("matrix not PSD in {context}: min eigenvalue {min_eig:.3e}")]
    NotPositive { context: &'static str, min_eig: f64 },

    /// A trace differs from its required value beyond tolerance.
    #[error("trace mismatch: got {got:.12e}, wanted {want:.12e}")]
    TraceMismatch { got: f64, want: f64 },

    /// Kraus operators fail their (sub)normalization contract.
    #[error("Kraus normalization off by {deviation:.3e} ({context})")]
    KrausNormalization { context: &'static str, deviation: f64 },

    /// A vector family handed to orthonormalization is linearly dependent.
    #[error("linearly dependent vectors: |det Gram| = {gram_det:.3e}")]
    LinearDependence { gram_det: f64 },

    /// First argument of a relative entropy leaks outside the second's support.
    #[error("support violation in relative entropy: leaked mass {leaked:.3e}")]
    SupportViolation { leaked: f64 },

    /// An operator log was requested of a matrix with a genuinely negative spectrum.
    #[error("negative eigenvalue {value:.3e} in {context}; cannot take operator log")]
    NegativeEigenvalue { context: &'static str, value: f64 },

    /// An iterative routine failed to reach its tolerance.
    #[error("{what} did not converge: {detail}")]
    Convergence { what: &'static str, detail: String },

    /// A constraint system admits no feasible point.
    #[error("infeasible: {detail}")]
    Infeasible { detail: String },

    /// A linear program is unbounded in the requested direction.
    #[error("unbounded objective: {detail}")]
    Unbounded { detail: String },

    /// Observed statistics are incompatible with the photon-number model.
    #[error("observation for pair (j={j}, k={k}) at intensity mu={mu} violates its bounds: {detail}")]
    ObservationInfeasible {
        j: usize,
        k: usize,
        mu: f64,
        detail: String,
    },

    /// Sifted statistics degenerate (for example a zero pass probability).
    #[error("degenerate statistics: {context}")]
    DegenerateStatistics { context: &'static str },

    /// A parameter is outside its documented domain.
    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    /// A bound or verdict could not be independently verified.
    #[error("certification failed: {detail}")]
    Certification { detail: String },
}
