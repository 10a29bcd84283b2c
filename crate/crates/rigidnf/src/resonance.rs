//! Enumeration of primary and secondary resonances.
//!
//! Primary: `ξ^{n_u} μ^{η n_v} = (μ^k)^η` (the Poincaré–Dulac relation of
//! the η-th iterate). Secondary: `λ^{η n}` is an eigenvalue of `D^η`. Both
//! lists are finite; the scan runs to a degree bound beyond which the
//! modulus of the left side drops below every admissible target.
//!
//! Exact mode decides equality exactly; float mode uses a relative
//! tolerance and reports near-misses inside 10× the tolerance as
//! pseudo-resonance warnings rather than classifying them silently.

use serde::Serialize;
use thiserror::Error;

use crate::germ::BlockStructure;
use crate::linalg::CMat;
use crate::multiseries::{indices_of_degree, Coeff, MultiIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    #[error("spectral radius {0} is not < 1; resonance degree bound undefined")]
    NotContracting(f64),
    #[error("block structure must be Jordan-split before resonance analysis")]
    NotSplit,
    #[error("declared resonance has wrong arity: expected {expected}, got {got}")]
    BadDeclaration { expected: usize, got: usize },
}

/// `u^{n_u} v^{n_v}` resonant for the k-th v-coordinate (1-based `k`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimaryResonance {
    pub coordinate_k: usize,
    pub n_u: Vec<u32>,
    pub n_v: Vec<u32>,
}

/// `x^{n_x}` secondary resonant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SecondaryResonance {
    pub n_x: Vec<u32>,
}

/// A near-miss within 10× the classification tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct PseudoResonance {
    pub description: String,
    pub defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    pub primaries: Vec<PrimaryResonance>,
    pub secondaries: Vec<SecondaryResonance>,
    pub degree_bound: u32,
    pub eta: usize,
    pub exact: bool,
    pub warnings: Vec<PseudoResonance>,
    pub declared: bool,
}

impl ResonanceReport {
    pub fn is_primary(&self, k: usize, n_u: &MultiIndex, n_v: &MultiIndex) -> bool {
        self.primaries
            .iter()
            .any(|p| p.coordinate_k == k && p.n_u == n_u.0 && p.n_v == n_v.0)
    }

    pub fn is_secondary(&self, n_x: &MultiIndex) -> bool {
        self.secondaries.iter().any(|s| s.n_x == n_x.0)
    }
}

/// Smallest `N` with `Λ^N` strictly below every admissible resonance target
/// modulus; no resonance of total degree ≥ N can exist. Targets above 1 are
/// unreachable for a contraction and impose no constraint.
pub fn degree_bound<C: Coeff>(blocks: &BlockStructure<C>) -> Result<u32, ResonanceError> {
    if !blocks.split_done {
        return Err(ResonanceError::NotSplit);
    }
    let lambda = blocks.spectral_radius;
    if lambda >= 1.0 {
        return Err(ResonanceError::NotContracting(lambda));
    }
    let mut targets: Vec<f64> = Vec::new();
    for m in &blocks.mu {
        targets.push(m.abs().powi(blocks.eta as i32));
    }
    if blocks.p > 0 {
        let d_eta = blocks.d_block.pow(blocks.eta);
        let mut df = CMat::<num::complex::Complex64>::zero(blocks.p, blocks.p);
        for i in 0..blocks.p {
            for j in 0..blocks.p {
                df[(i, j)] = num::complex::Complex64::new(d_eta[(i, j)] as f64, 0.0);
            }
        }
        if let Ok(eigs) = crate::eigen::eigenvalues_c64(&df) {
            targets.extend(eigs.iter().map(|z| z.norm()));
        }
    }
    if blocks.e == 0 && blocks.p == 0 {
        return Ok(0);
    }
    let target = targets
        .into_iter()
        .filter(|&t| t.is_finite())
        .fold(1.0f64, f64::min);
    if lambda == 0.0 {
        return Ok(1);
    }
    let mut n = 1u32;
    let mut pw = lambda;
    while pw >= target {
        pw *= lambda;
        n += 1;
        if n > 10_000 {
            return Err(ResonanceError::NotContracting(lambda));
        }
    }
    Ok(n)
}

struct EqClassifier {
    tol: f64,
    exact: bool,
    warnings: Vec<PseudoResonance>,
}

impl EqClassifier {
    fn matches<C: Coeff>(&mut self, lhs: &C, rhs: &C, what: impl Fn() -> String) -> bool {
        if self.exact {
            return lhs == rhs;
        }
        let defect = lhs.sub(rhs).abs();
        let scale = rhs.abs().max(1.0);
        if defect <= self.tol * scale {
            true
        } else {
            if defect <= 10.0 * self.tol * scale {
                self.warnings.push(PseudoResonance {
                    description: format!("{}: defect {defect:.3e}", what()),
                    defect,
                });
            }
            false
        }
    }

    fn det_vanishes<C: Coeff>(&mut self, det: &C, scale: f64, what: impl Fn() -> String) -> bool {
        if self.exact {
            return det.is_zero(0.0);
        }
        let defect = det.abs();
        let scale = scale.max(1.0);
        if defect <= self.tol * scale {
            true
        } else {
            if defect <= 10.0 * self.tol * scale {
                self.warnings.push(PseudoResonance {
                    description: format!("{}: determinant {defect:.3e}", what()),
                    defect,
                });
            }
            false
        }
    }
}

/// Exhaustive primary-resonance scan over `1 ≤ |n_u| + |n_v| ≤ bound`.
pub fn primary_resonances<C: Coeff>(
    blocks: &BlockStructure<C>,
    bound: u32,
    tol_res: f64,
) -> (Vec<PrimaryResonance>, Vec<PseudoResonance>) {
    let mut out = Vec::new();
    let mut cls = EqClassifier { tol: tol_res, exact: C::EXACT, warnings: Vec::new() };
    if blocks.e == 0 {
        return (out, cls.warnings);
    }
    let (r, e, eta) = (blocks.r, blocks.e, blocks.eta);
    for k in 1..=e {
        let target = blocks.mu[k - 1].pow_usize(eta);
        for deg in 1..=bound {
            for n in indices_of_degree(r + e, deg) {
                let n_u = n.slice(0, r);
                let n_v = n.slice(r, r + e);
                let lhs = blocks.eta_eigen_monomial(&n_u, &n_v);
                if cls.matches(&lhs, &target, || {
                    format!("primary k={k} n_u={n_u} n_v={n_v}")
                }) {
                    out.push(PrimaryResonance { coordinate_k: k, n_u: n_u.0, n_v: n_v.0 });
                }
            }
        }
    }
    (out, cls.warnings)
}

/// Exhaustive secondary-resonance scan: `det(D^η − λ^{ηn} Id) = 0` over
/// `1 ≤ |n| ≤ bound`.
pub fn secondary_resonances<C: Coeff>(
    blocks: &BlockStructure<C>,
    bound: u32,
    tol_res: f64,
) -> (Vec<SecondaryResonance>, Vec<PseudoResonance>) {
    let mut out = Vec::new();
    let mut cls = EqClassifier { tol: tol_res, exact: C::EXACT, warnings: Vec::new() };
    if blocks.p == 0 {
        return (out, cls.warnings);
    }
    let (r, e, p, eta) = (blocks.r, blocks.e, blocks.p, blocks.eta);
    let s = r + e;
    let d_eta = blocks.d_block.pow(eta);
    let scale: f64 = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| (d_eta[(i, j)] as f64).powi(2))
                .sum::<f64>()
                .sqrt()
                .max(1.0)
        })
        .product();
    for deg in 1..=bound {
        for n in indices_of_degree(s, deg) {
            let lam = blocks.eta_eigen_monomial(&n.slice(0, r), &n.slice(r, s));
            let mut m = CMat::<C>::zero(p, p);
            for i in 0..p {
                for j in 0..p {
                    m[(i, j)] = C::from_ratio(d_eta[(i, j)], 1);
                }
                m[(i, i)] = m[(i, i)].sub(&lam);
            }
            let det = m.det();
            if cls.det_vanishes(&det, scale, || format!("secondary n={n}")) {
                out.push(SecondaryResonance { n_x: n.0 });
            }
        }
    }
    (out, cls.warnings)
}

/// Optional user-declared resonance lists; they override detection so that
/// exact mode can express algebraic-irrational cases.
#[derive(Clone, Debug, Default)]
pub struct DeclaredResonances {
    pub primary: Vec<(usize, Vec<u32>)>,
    pub secondary: Vec<Vec<u32>>,
}

impl DeclaredResonances {
    pub fn is_empty(&self) -> bool {
        self.primary.is_empty() && self.secondary.is_empty()
    }
}

/// Build the full report: scan to the degree bound, or take the declared
/// lists when present.
pub fn resonance_report<C: Coeff>(
    blocks: &BlockStructure<C>,
    declared: Option<&DeclaredResonances>,
    tol_res: f64,
) -> Result<ResonanceReport, ResonanceError> {
    let bound = degree_bound(blocks)?;
    let (r, e) = (blocks.r, blocks.e);
    let s = r + e;
    if let Some(decl) = declared.filter(|d| !d.is_empty()) {
        let mut primaries = Vec::new();
        for (k, n) in &decl.primary {
            if n.len() != s || *k == 0 || *k > e {
                return Err(ResonanceError::BadDeclaration { expected: s, got: n.len() });
            }
            primaries.push(PrimaryResonance {
                coordinate_k: *k,
                n_u: n[..r].to_vec(),
                n_v: n[r..].to_vec(),
            });
        }
        let mut secondaries = Vec::new();
        for n in &decl.secondary {
            if n.len() != s {
                return Err(ResonanceError::BadDeclaration { expected: s, got: n.len() });
            }
            secondaries.push(SecondaryResonance { n_x: n.clone() });
        }
        return Ok(ResonanceReport {
            primaries,
            secondaries,
            degree_bound: bound,
            eta: blocks.eta,
            exact: C::EXACT,
            warnings: Vec::new(),
            declared: true,
        });
    }
    let (primaries, mut warnings) = primary_resonances(blocks, bound, tol_res);
    let (secondaries, w2) = secondary_resonances(blocks, bound, tol_res);
    warnings.extend(w2);
    Ok(ResonanceReport {
        primaries,
        secondaries,
        degree_bound: bound,
        eta: blocks.eta,
        exact: C::EXACT,
        warnings,
        declared: false,
    })
}
