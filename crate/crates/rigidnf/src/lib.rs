//! Constructive normal forms for contracting rigid holomorphic germs.
//!
//! The pipeline: parse a germ in prepared coordinates, certify rigidity and
//! read off its internal action, split blocks and Jordan-normalize the free
//! linear part, enumerate primary and secondary resonances, then run the
//! conjugation passes (kill θ, normalize the v-block up to primary
//! resonances, the y-block up to secondary resonances, and make the last
//! coordinate affine when s+p = d−1). Every stage returns a change of
//! coordinates whose conjugacy residual is checked at the truncation degree.
//! Dimension-3 results are matched against the classification table.

pub mod config;
pub mod multiseries;
pub mod linalg;
pub mod eigen;
pub mod germ;
pub mod resonance;
pub mod normalizer;
pub mod classify3d;
pub mod lang;
pub mod report;

pub use config::{CoeffMode, Tolerances, DEFAULT_TRUNC};
pub use germ::GermMap;
pub use multiseries::{Cf64, Coeff, GaussRational, MultiIndex, Series};
