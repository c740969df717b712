use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the Gaussian-state pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An eigenvalue sits too close to zero for the absolute-value map.
    #[error("degenerate spectrum: eigenvalue modulus {modulus:.3e} below tolerance {tol:.3e}")]
    DegenerateSpectrum { modulus: f64, tol: f64 },

    /// Bosonic quadratic form is not positive definite.
    #[error("unbounded Hamiltonian: quadratic form is not positive definite")]
    UnboundedHamiltonian,

    /// Fermionic bilinear form has a (near-)zero excitation energy.
    #[error("gapless Hamiltonian: smallest excitation energy {0:.3e} is numerically zero")]
    GaplessHamiltonian(f64),

    /// A restricted complex structure left its statistics-allowed range.
    #[error("invalid restriction: eigenvalue {value:.12} outside allowed range by {excess:.3e}")]
    InvalidRestriction { value: f64, excess: f64 },

    /// Partner construction requested for a pure (unentangled) mode.
    #[error("no partner: mode with squeezing parameter {0:.3e} is pure on its own")]
    NoPartner(f64),

    /// The two covectors fail to span a mode.
    #[error("degenerate mode: {0}")]
    DegenerateMode(String),

    /// A formula produced a value inconsistent with its constraints.
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    /// A physical precondition on the inputs is violated.
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    /// Squeezing parameter outside its statistics-allowed interval.
    #[error("invalid squeezing parameter {0}")]
    InvalidSqueezing(f64),

    /// Oracle asked to diagonalize beyond its size limits.
    #[error("oracle size limit exceeded: {requested} modes, limit {limit}")]
    OracleTooLarge { requested: usize, limit: usize },

    /// Truncated-oracle result did not converge to the requested tolerance.
    #[error("oracle not converged: truncation estimate {estimate:.3e} exceeds {requested:.3e}")]
    NotConverged { estimate: f64, requested: f64 },

    /// Malformed model parameters.
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    /// Dimensions of the inputs do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An iterative decomposition failed to converge.
    #[error("decomposition failed: {0}")]
    DecompositionFailed(String),
}
