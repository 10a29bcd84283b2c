//! Run-wide numeric configuration.

use serde::{Deserialize, Serialize};

/// Coefficient backend selected per run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffMode {
    Exact,
    Float,
}

impl Default for CoeffMode {
    fn default() -> Self {
        CoeffMode::Float
    }
}

/// Tolerances for the float backend. Exact mode ignores all of them except
/// `series`, which bounds the iteration count of analytic tail summation.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    /// Zero test for stored coefficients.
    pub coeff: f64,
    /// Resonance classification and solver rank decisions.
    pub res: f64,
    /// Eigenvalue clustering and contraction boundary detection.
    pub eig: f64,
    /// Acceptable conjugacy residual for a certificate.
    pub residual: f64,
    /// Stop rule for truncated analytic products and tail sums.
    pub series: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            coeff: 1e-12,
            res: 1e-9,
            eig: 1e-9,
            residual: 1e-8,
            series: 1e-14,
        }
    }
}

/// Default truncation degree for germ files and the CLI.
pub const DEFAULT_TRUNC: u32 = 8;
