//! Entanglement structure of Gaussian states and the energy cost of
//! extracting entangled mode pairs from ground states of quadratic
//! Hamiltonians, for both bosonic and fermionic statistics.
//!
//! The crate is organized around the phase-space picture: a state is a
//! covariance matrix (symmetric `G` for bosons, antisymmetric `Ω` for
//! fermions) over a fixed interleaved basis `(q_1, p_1, …, q_N, p_N)`,
//! and a mode is a pair of covectors defining two conjugate quadratures.
//!
//! * [`linalg`] — dense-matrix substrate: bilinear form pairs, the
//!   eigenvalue absolute-value map, matrix exponentials, Wick contractions.
//! * [`boson`] — bosonic Gaussian states, partner modes, two-mode
//!   extraction costs and optimal mode corrections.
//! * [`fermion`] — the fermionic mirror, including the piecewise cost law
//!   and the four candidate product states.
//! * [`models`] — dilute Bose gas pairs and the XY chain mapped to
//!   quadratic fermions.
//! * [`oracle`] — independent verification: seeded Haar sampling, exact
//!   and truncated Fock-space diagonalization, spectrum bounds, and the
//!   standard-form decomposition.
//!
//! Batch scans (grids, Haar samples) run data-parallel through [rayon]
//! when the default `parallel` feature is enabled; disabling it falls
//! back to equivalent sequential loops with identical results.
//!
//! [rayon]: https://docs.rs/rayon

pub mod boson;
pub mod error;
pub mod fermion;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod par;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{FormPair, Mat, RVec, Statistics};

/// Default tolerances, relative to the scale of the data they gate.
pub mod tol {
    /// Structural identities (purity, commutation, standard forms).
    pub const STRUCTURAL: f64 = 1e-10;
    /// Comparisons against an independent oracle.
    pub const ORACLE: f64 = 1e-8;
    /// Gap below which eigenvalue clusters count as degenerate.
    pub const DEGENERACY: f64 = 1e-9;
    /// Preconditions that divide by a quantity (squeezing, overlaps).
    pub const SINGULAR: f64 = 1e-12;
}
