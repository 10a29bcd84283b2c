//! Brute-force conjugacy oracle.
//!
//! Solves the same conjugacy relations as the structured passes, but as one
//! dense linear system per total degree in ALL unknown coefficients — no
//! weight bookkeeping, no orbit structure. Rank deficiencies are handled by
//! a lexicographic least-norm rule that zeroes as much of the normal form
//! as the equations allow, so the surviving monomial slots must agree with
//! the structured solver. Intended for small instances only.

use crate::germ::{BlockStructure, GermMap};
use crate::linalg::{solve_lexicographic, CMat};
use crate::multiseries::{identity_tuple, indices_of_degree, Coeff, MultiIndex, Series};

use super::primary::primary_eq_series;
use super::secondary::{secondary_eq_series, y_units};
use super::solver::SolverError;
use super::conjugate_germ;

/// Which conjugacy equation the oracle solves.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TargetShape {
    Primary,
    Secondary,
}

pub struct OracleOutcome<C: Coeff> {
    pub phi: Vec<Series<C>>,
    pub germ: GermMap<C>,
    /// Surviving primary slots `(k, n_x)`.
    pub kept_primary: Vec<(usize, MultiIndex)>,
    /// Surviving secondary slots `n_x`.
    pub kept_secondary: Vec<MultiIndex>,
}

/// Threshold above which a solved normal-form coefficient counts as a
/// surviving slot.
pub fn support_threshold(exact: bool) -> f64 {
    if exact {
        0.0
    } else {
        1e-8
    }
}

pub fn oracle_solve<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
    shape: TargetShape,
) -> Result<OracleOutcome<C>, SolverError> {
    match shape {
        TargetShape::Primary => oracle_primary(f, blocks),
        TargetShape::Secondary => oracle_secondary(f, blocks),
    }
}

fn oracle_primary<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
) -> Result<OracleOutcome<C>, SolverError> {
    let d = f.dim();
    let n_trunc = f.trunc();
    let (r, e) = (blocks.r, blocks.e);
    let s = blocks.s();
    let tols = f.tols;
    let mut phi: Vec<Series<C>> = (0..e)
        .map(|k| Series::variable(r + k, d, n_trunc))
        .collect();
    let mut target: Vec<Series<C>> = (0..e)
        .map(|k| Series::monomial(MultiIndex::unit(s, r + k), blocks.mu[k].clone(), n_trunc))
        .collect();
    if e > 0 {
        for m in 1..=n_trunc {
            let keys = indices_of_degree(d, m);
            let s_keys = indices_of_degree(s, m);
            let phi_unknowns: Vec<(usize, MultiIndex)> = (0..e)
                .flat_map(|k| {
                    keys.iter()
                        .filter(move |n| !(m == 1 && **n == MultiIndex::unit(d, r + k)))
                        .map(move |n| (k, n.clone()))
                })
                .collect();
            let nf_unknowns: Vec<(usize, MultiIndex)> = (0..e)
                .flat_map(|k| {
                    s_keys
                        .iter()
                        .filter(move |w| !(m == 1 && **w == MultiIndex::unit(s, r + k)))
                        .map(move |w| (k, w.clone()))
                })
                .collect();
            let eval = |phi: &[Series<C>], target: &[Series<C>]| -> Result<Vec<C>, SolverError> {
                let eq = primary_eq_series(f, blocks, phi, target, m)?;
                Ok((0..e)
                    .flat_map(|k| {
                        keys.iter()
                            .map(|n| eq[k].coeff(n))
                            .collect::<Vec<_>>()
                    })
                    .collect())
            };
            let base = eval(&phi, &target)?;
            let rows = base.len();
            let mut a_phi = CMat::<C>::zero(rows, phi_unknowns.len());
            for (col, (k, n)) in phi_unknowns.iter().enumerate() {
                phi[*k].add_term(n.clone(), C::one());
                let pert = eval(&phi, &target)?;
                phi[*k].add_term(n.clone(), C::one().neg());
                for (row, (pv, bv)) in pert.iter().zip(&base).enumerate() {
                    a_phi[(row, col)] = pv.sub(bv);
                }
            }
            let mut a_nf = CMat::<C>::zero(rows, nf_unknowns.len());
            for (col, (k, w)) in nf_unknowns.iter().enumerate() {
                target[*k].add_term(w.clone(), C::one());
                let pert = eval(&phi, &target)?;
                target[*k].add_term(w.clone(), C::one().neg());
                for (row, (pv, bv)) in pert.iter().zip(&base).enumerate() {
                    a_nf[(row, col)] = pv.sub(bv);
                }
            }
            let b: Vec<C> = base.iter().map(|c| c.neg()).collect();
            let (x_phi, x_nf) = solve_lexicographic(&a_phi, &a_nf, &b, tols.res)
                .ok_or_else(|| SolverError::OracleInconsistent {
                    degree: m,
                    detail: "primary degree system".into(),
                })?;
            for ((k, n), v) in phi_unknowns.iter().zip(x_phi) {
                if !v.is_zero(0.0) {
                    phi[*k].add_term(n.clone(), v);
                }
            }
            for ((k, w), v) in nf_unknowns.iter().zip(x_nf) {
                if !v.is_zero(0.0) {
                    target[*k].add_term(w.clone(), v);
                }
            }
        }
    }
    let mut phi_total = identity_tuple::<C>(d, n_trunc);
    for k in 0..e {
        phi_total[r + k] = phi[k].clone();
    }
    let germ_raw = conjugate_germ(f, &phi_total)?;
    let mut comps = germ_raw.components().to_vec();
    for k in 0..e {
        let mut v = Series::zero(d, n_trunc);
        for (w, c) in target[k].terms() {
            let mut n = w.0.clone();
            n.extend(std::iter::repeat(0).take(d - s));
            v.set_term(MultiIndex(n), c.clone());
        }
        comps[r + k] = v;
    }
    let germ = germ_raw.with_components(comps)?;
    let thr = support_threshold(C::EXACT);
    let mut kept = Vec::new();
    for k in 0..e {
        for (w, c) in target[k].terms() {
            if *w != MultiIndex::unit(s, r + k) && !c.is_zero(thr) {
                kept.push((k + 1, w.clone()));
            }
        }
    }
    kept.sort();
    Ok(OracleOutcome { phi: phi_total, germ, kept_primary: kept, kept_secondary: Vec::new() })
}

fn oracle_secondary<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
) -> Result<OracleOutcome<C>, SolverError> {
    let d = f.dim();
    let n_trunc = f.trunc();
    let p = blocks.p;
    let s = blocks.s();
    let tols = f.tols;
    let g_units = y_units(f, blocks)?;
    let mut phi: Vec<Series<C>> = vec![Series::zero(d, n_trunc); p];
    let mut gtilde: Vec<Series<C>> = vec![Series::zero(s, n_trunc); p];
    if p > 0 {
        for m in 1..=n_trunc {
            let keys = indices_of_degree(d, m);
            let s_keys = indices_of_degree(s, m);
            let phi_unknowns: Vec<(usize, MultiIndex)> = (0..p)
                .flat_map(|k| keys.iter().map(move |n| (k, n.clone())))
                .collect();
            let nf_unknowns: Vec<(usize, MultiIndex)> = (0..p)
                .flat_map(|k| s_keys.iter().map(move |w| (k, w.clone())))
                .collect();
            let eval = |phi: &[Series<C>], gt: &[Series<C>]| -> Result<Vec<C>, SolverError> {
                let eq = secondary_eq_series(f, blocks, &g_units, phi, gt, m)?;
                Ok((0..p)
                    .flat_map(|k| keys.iter().map(|n| eq[k].coeff(n)).collect::<Vec<_>>())
                    .collect())
            };
            let base = eval(&phi, &gtilde)?;
            let rows = base.len();
            let mut a_phi = CMat::<C>::zero(rows, phi_unknowns.len());
            for (col, (k, n)) in phi_unknowns.iter().enumerate() {
                phi[*k].add_term(n.clone(), C::one());
                let pert = eval(&phi, &gtilde)?;
                phi[*k].add_term(n.clone(), C::one().neg());
                for (row, (pv, bv)) in pert.iter().zip(&base).enumerate() {
                    a_phi[(row, col)] = pv.sub(bv);
                }
            }
            let mut a_nf = CMat::<C>::zero(rows, nf_unknowns.len());
            for (col, (k, w)) in nf_unknowns.iter().enumerate() {
                gtilde[*k].add_term(w.clone(), C::one());
                let pert = eval(&phi, &gtilde)?;
                gtilde[*k].add_term(w.clone(), C::one().neg());
                for (row, (pv, bv)) in pert.iter().zip(&base).enumerate() {
                    a_nf[(row, col)] = pv.sub(bv);
                }
            }
            let b: Vec<C> = base.iter().map(|c| c.neg()).collect();
            let (x_phi, x_nf) = solve_lexicographic(&a_phi, &a_nf, &b, tols.res)
                .ok_or_else(|| SolverError::OracleInconsistent {
                    degree: m,
                    detail: "secondary degree system".into(),
                })?;
            for ((k, n), v) in phi_unknowns.iter().zip(x_phi) {
                if !v.is_zero(0.0) {
                    phi[*k].add_term(n.clone(), v);
                }
            }
            for ((k, w), v) in nf_unknowns.iter().zip(x_nf) {
                if !v.is_zero(0.0) {
                    gtilde[*k].add_term(w.clone(), v);
                }
            }
        }
    }
    let one = Series::one(d, n_trunc);
    let mut phi_total = identity_tuple::<C>(d, n_trunc);
    for k in 0..p {
        phi_total[s + k] = phi_total[s + k].mul(&one.add(&phi[k])?)?;
    }
    let germ_raw = conjugate_germ(f, &phi_total)?;
    let mut comps = germ_raw.components().to_vec();
    for k in 0..p {
        let mut mono = MultiIndex::zero(d);
        for l in 0..blocks.r {
            mono.0[l] = blocks.c_block[(l, k)] as u32;
        }
        for l in 0..p {
            mono.0[s + l] = blocks.d_block[(l, k)] as u32;
        }
        let mut unit = Series::one(d, n_trunc);
        for (w, c) in gtilde[k].terms() {
            let mut n = w.0.clone();
            n.extend(std::iter::repeat(0).take(d - s));
            unit.add_term(MultiIndex(n), c.clone());
        }
        comps[s + k] = Series::monomial(mono, blocks.beta[k].clone(), n_trunc).mul(&unit)?;
    }
    let germ = germ_raw.with_components(comps)?;
    let thr = support_threshold(C::EXACT);
    let mut kept: Vec<MultiIndex> = Vec::new();
    for k in 0..p {
        for (w, c) in gtilde[k].terms() {
            if !c.is_zero(thr) {
                kept.push(w.clone());
            }
        }
    }
    kept.sort();
    kept.dedup();
    Ok(OracleOutcome { phi: phi_total, germ, kept_primary: Vec::new(), kept_secondary: kept })
}
