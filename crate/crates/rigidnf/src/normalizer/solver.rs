//! Shared machinery for the degree-by-degree conjugacy solvers.
//!
//! Both coefficient passes solve, per total degree, an affine system whose
//! same-degree couplings come from two sources: composition with the linear
//! part of the germ (the action on a homogeneous slice is a product of
//! linear forms), and the cyclic shift along the orbit of the periodic
//! permutation `B`. Every other linear entry of the germ strictly lowers a
//! weight attached to the variables, so processing keys in decreasing
//! weight and propagating solved values forward makes each orbit an
//! independent small cyclic system — the ones whose determinant detects
//! resonance.

use std::collections::BTreeMap;
use std::collections::HashMap;

use thiserror::Error;

use crate::germ::BlockStructure;
use crate::multiseries::{Coeff, MultiIndex, Series};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("{pass}: no convergence after {iterations} iterations (last increment {increment:.3e})")]
    NonConvergence { pass: &'static str, iterations: usize, increment: f64 },
    #[error("solver/resonance tolerance mismatch: {0}")]
    ToleranceMismatch(String),
    #[error("internal solver check failed: {0}")]
    Internal(String),
    #[error("pass precondition violated: {0}")]
    Precondition(String),
    #[error("conjugacy residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("oracle system inconsistent at degree {degree}: {detail}")]
    OracleInconsistent { degree: u32, detail: String },
    #[error("series error: {0}")]
    Series(#[from] crate::multiseries::SeriesError),
    #[error("germ error: {0}")]
    Germ(#[from] crate::germ::GermError),
}

/// Linear forms (one per input variable) with output-variable coefficients.
pub(crate) type LinForms<C> = Vec<Vec<(usize, C)>>;

/// Degree-1 coefficient table of a series tuple, pruned at `tol`.
pub(crate) fn linear_forms<C: Coeff>(tuple: &[Series<C>], tol: f64) -> LinForms<C> {
    tuple
        .iter()
        .map(|s| {
            (0..s.dim())
                .filter_map(|j| {
                    let c = s.coeff(&MultiIndex::unit(s.dim(), j));
                    if c.is_zero(tol) {
                        None
                    } else {
                        Some((j, c))
                    }
                })
                .collect()
        })
        .collect()
}

/// Degree-|i| slice of `∏_j (form_j)^{i_j}` over `dim_out` output variables.
pub(crate) fn sym_column<C: Coeff>(
    forms: &LinForms<C>,
    i: &MultiIndex,
    dim_out: usize,
) -> Vec<(MultiIndex, C)> {
    let mut acc: BTreeMap<MultiIndex, C> = BTreeMap::new();
    acc.insert(MultiIndex::zero(dim_out), C::one());
    for (j, &e) in i.0.iter().enumerate() {
        for _ in 0..e {
            let mut next: BTreeMap<MultiIndex, C> = BTreeMap::new();
            for (n, c) in &acc {
                for (var, fc) in &forms[j] {
                    let mut m = n.clone();
                    m.0[*var] += 1;
                    let p = c.mul(fc);
                    next.entry(m)
                        .and_modify(|x| *x = x.add(&p))
                        .or_insert(p);
                }
            }
            acc = next;
            if acc.is_empty() {
                return Vec::new();
            }
        }
    }
    acc.retain(|_, c| !c.is_zero(0.0));
    acc.into_iter().collect()
}

/// Per-variable weights in the split `(u, v, y, z)` layout. Every linear
/// entry of a prepared germ maps a variable to strictly lighter ones, except
/// the `u`-cycles (weight-preserving, handled as orbits) and the diagonal
/// `μ` entries.
pub(crate) fn variable_weights<C: Coeff>(
    blocks: &BlockStructure<C>,
) -> Result<Vec<i64>, SolverError> {
    let d = blocks.dim;
    let (r, e, p) = (blocks.r, blocks.e, blocks.p);
    let mut w = vec![0i64; d];
    for k in 0..r {
        w[k] = 1_000;
    }
    // y-weights respect the DAG of degree-1 monomial columns.
    let depth = y_dag_depth(blocks)?;
    for k in 0..p {
        w[r + e + k] = 2_000 + depth[k];
    }
    for k in 0..e {
        w[r + k] = 1_000_000 + 1_000 * (k as i64 + 1);
    }
    for k in 0..blocks.z_dim() {
        w[r + e + p + k] = 1_000_000 + 1_000 * (k as i64 + 1);
    }
    Ok(w)
}

/// Longest-path depth of each y-coordinate along degree-1 column edges
/// `k → j` (column k of [E; D] equals the unit vector at y_j).
fn y_dag_depth<C: Coeff>(blocks: &BlockStructure<C>) -> Result<Vec<i64>, SolverError> {
    let p = blocks.p;
    let mut edge = vec![None; p];
    for k in 0..p {
        let c_deg: i64 = (0..blocks.r).map(|l| blocks.c_block[(l, k)]).sum();
        let d_deg: i64 = (0..p).map(|l| blocks.d_block[(l, k)]).sum();
        if c_deg == 0 && d_deg == 1 {
            let j = (0..p).find(|&l| blocks.d_block[(l, k)] == 1).unwrap();
            edge[k] = Some(j);
        }
    }
    let mut depth = vec![-1i64; p];
    fn depth_of(
        k: usize,
        edge: &[Option<usize>],
        depth: &mut [i64],
        visiting: &mut [bool],
    ) -> Result<i64, SolverError> {
        if depth[k] >= 0 {
            return Ok(depth[k]);
        }
        if visiting[k] {
            return Err(SolverError::Precondition(
                "cycle among degree-1 non-periodic columns".into(),
            ));
        }
        visiting[k] = true;
        let d = match edge[k] {
            Some(j) => 1 + depth_of(j, edge, depth, visiting)?,
            None => 0,
        };
        visiting[k] = false;
        depth[k] = d;
        Ok(d)
    }
    let mut visiting = vec![false; p];
    for k in 0..p {
        depth_of(k, &edge, &mut depth, &mut visiting)?;
    }
    Ok(depth)
}

pub(crate) fn index_weight(n: &MultiIndex, w: &[i64]) -> i64 {
    n.0.iter()
        .zip(w)
        .map(|(&e, &wv)| e as i64 * wv)
        .sum()
}

/// `n ↦ (B^{-1} n_u, rest unchanged)` in the split layout.
pub(crate) fn orbit_shift(n: &MultiIndex, b_map: &[usize]) -> MultiIndex {
    let mut out = n.clone();
    for (k, &bk) in b_map.iter().enumerate() {
        out.0[k] = n.0[bk];
    }
    out
}

/// Orbit of an x-supported key under the shift, starting at `n`.
pub(crate) fn orbit_members(n: &MultiIndex, b_map: &[usize]) -> Vec<MultiIndex> {
    let mut members = vec![n.clone()];
    let mut cur = orbit_shift(n, b_map);
    while cur != *n {
        members.push(cur.clone());
        cur = orbit_shift(&cur, b_map);
    }
    members
}

/// Keys of one degree grouped for solving: orbits for x-supported keys (no
/// y/z exponents), singletons otherwise, ordered by decreasing weight.
pub(crate) struct LevelGroups {
    pub groups: Vec<Vec<MultiIndex>>,
}

pub(crate) fn group_level_keys<C: Coeff>(
    keys: &[MultiIndex],
    blocks: &BlockStructure<C>,
    weights: &[i64],
) -> LevelGroups {
    let s = blocks.s();
    let mut seen: HashMap<MultiIndex, bool> = HashMap::new();
    let mut groups: Vec<(i64, Vec<MultiIndex>)> = Vec::new();
    for n in keys {
        if seen.contains_key(n) {
            continue;
        }
        if n.supported_in(0, s) {
            let members = orbit_members(n, &blocks.b_map);
            for m in &members {
                seen.insert(m.clone(), true);
            }
            let w = index_weight(n, weights);
            groups.push((w, members));
        } else {
            seen.insert(n.clone(), true);
            groups.push((index_weight(n, weights), vec![n.clone()]));
        }
    }
    groups.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1[0].cmp(&b.1[0])));
    LevelGroups { groups: groups.into_iter().map(|g| g.1).collect() }
}

/// Find the coefficient of `target` inside a sparse column.
pub(crate) fn column_entry<C: Coeff>(col: &[(MultiIndex, C)], target: &MultiIndex) -> C {
    col.iter()
        .find(|(n, _)| n == target)
        .map(|(_, c)| c.clone())
        .unwrap_or_else(C::zero)
}

/// Snap a constant term that is zero up to float round-off (e.g. `β·β⁻¹-1`
/// after a monomial division) to exact zero; reject anything larger.
pub(crate) fn snap_zero_constant<C: Coeff>(
    s: &mut Series<C>,
    gate: f64,
    what: &str,
) -> Result<(), SolverError> {
    let c0 = s.constant_term();
    if c0.is_zero(0.0) {
        return Ok(());
    }
    if !c0.is_zero(gate) {
        return Err(SolverError::Precondition(format!(
            "{what}: constant term {} exceeds the round-off gate {gate:.1e}",
            c0.abs()
        )));
    }
    s.set_term(MultiIndex::zero(s.dim()), C::zero());
    Ok(())
}
