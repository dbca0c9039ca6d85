//! Numerical tolerances shared by every check in the crate.
//!
//! Every report that performs a comparison carries the value it compared
//! against, so a report can be audited without knowing which configuration
//! produced it.

use serde::{Deserialize, Serialize};

/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative reconstruction and orthonormality bound of eigendecompositions.
    pub eig: f64,
    /// Relative anti-Hermitian part tolerated before symmetrization.
    pub herm: f64,
    /// Smallest eigenvalue accepted as strictly positive.
    pub pos: f64,
    /// Relative magnitude below which a Kraus coefficient counts as zero.
    pub zero: f64,
    /// Absolute gap between potentials merged into one class.
    pub group: f64,
    /// Trace-preservation deviation `‖Σ M†M − 1‖_F`.
    pub tp: f64,
    /// Fixed-point residual `‖E(π) − π‖_F`.
    pub fix: f64,
    /// Branch probabilities at or below this are pruned.
    pub prob: f64,
    /// Relative eigenvalue threshold of `(S − 1)†(S − 1)` counted as null.
    pub null: f64,
    /// Trace deviation accepted for user-supplied density matrices.
    pub trace: f64,
    /// Relative residual for detailed-balance, ladder and Bohr checks.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eig: 1e-12,
            herm: 1e-10,
            pos: 1e-12,
            zero: 1e-10,
            group: 1e-9,
            tp: 1e-10,
            fix: 1e-10,
            prob: 1e-14,
            null: 1e-13,
            trace: 1e-12,
            residual: 1e-10,
        }
    }
}
