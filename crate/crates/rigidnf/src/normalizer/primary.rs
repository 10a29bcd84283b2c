//! The primary-resonance pass: normalize the v-block to `μv + ρ(u, v)` with
//! ρ supported on primary resonant slots only.
//!
//! Step 1 solves the conjugacy relation `φ∘f = μφ + ρ̃(u, φ)` coefficient
//! by coefficient in increasing weight `|n| + k/e`; per orbit of the
//! periodic permutation the undetermined block is a small cyclic system
//! whose determinant vanishes exactly at primary resonances. Step 2 kills
//! the remaining analytic tail per coordinate with the geometric sum
//! `φᵏ = Σ (μᵏ)^{-n} Rᵏ∘f^{∘(n-1)}`, truncated under the series stop rule.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::germ::{BlockStructure, GermMap};
use crate::linalg::CMat;
use crate::multiseries::{
    compose_tuple, identity_tuple, indices_of_degree, Coeff, MultiIndex, Series,
};
use crate::resonance::ResonanceReport;

use super::solver::{
    column_entry, group_level_keys, linear_forms, sym_column, variable_weights,
    SolverError,
};
use super::{conjugate_germ, tail_iteration_cap, PassOptions};

pub struct PrimaryOutcome<C: Coeff> {
    pub phi: Vec<Series<C>>,
    pub germ: GermMap<C>,
    /// Kept normal-form slots `(k, n_x)` with nonzero coefficient.
    pub kept: Vec<(usize, MultiIndex)>,
    pub tail_iterations: usize,
}

/// Evaluate the conjugacy defect `rhs − lhs` of the primary relation at
/// truncation `t`: `rhs = target∘(u, φ)`, `lhs = φ∘f`.
pub(crate) fn primary_eq_series<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
    phi: &[Series<C>],
    target: &[Series<C>],
    t: u32,
) -> Result<Vec<Series<C>>, SolverError> {
    let d = f.dim();
    let r = blocks.r;
    let mut inner: Vec<Series<C>> = Vec::with_capacity(blocks.s());
    for j in 0..r {
        inner.push(Series::variable(j, d, t));
    }
    for p in phi {
        inner.push(p.truncate_to(t));
    }
    let f_t: Vec<Series<C>> = f.components().iter().map(|s| s.truncate_to(t)).collect();
    let mut out = Vec::with_capacity(phi.len());
    for (k, p) in phi.iter().enumerate() {
        let rhs = target[k].truncate_to(t).compose(&inner)?;
        let lhs = p.truncate_to(t).compose(&f_t)?;
        out.push(rhs.sub(&lhs)?);
    }
    Ok(out)
}

pub fn pass_primary<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
    report: &ResonanceReport,
    opts: &PassOptions,
) -> Result<PrimaryOutcome<C>, SolverError> {
    if !blocks.split_done {
        return Err(SolverError::Precondition(
            "pass_primary requires a Jordan-split germ".into(),
        ));
    }
    let d = f.dim();
    let n_trunc = f.trunc();
    let (r, e) = (blocks.r, blocks.e);
    let s = blocks.s();
    let tols = f.tols;
    if e == 0 {
        return Ok(PrimaryOutcome {
            phi: identity_tuple(d, n_trunc),
            germ: f.clone(),
            kept: Vec::new(),
            tail_iterations: 0,
        });
    }
    let cutoff = opts.induction_cutoff(report.degree_bound, n_trunc, C::EXACT);

    // Solver state: φ^k seeded with v_k, target^k (in s variables) seeded
    // with μ^k v_k.
    let mut phi: Vec<Series<C>> = (0..e)
        .map(|k| Series::variable(r + k, d, n_trunc))
        .collect();
    let mut target: Vec<Series<C>> = (0..e)
        .map(|k| {
            Series::monomial(MultiIndex::unit(s, r + k), blocks.mu[k].clone(), n_trunc)
        })
        .collect();
    let mut kept: Vec<(usize, MultiIndex)> = Vec::new();

    let weights = variable_weights(blocks)?;
    let f_forms = linear_forms(f.components(), tols.coeff);

    for m in 1..=cutoff {
        let level_keys = indices_of_degree(d, m);
        let mut symf_cols: HashMap<MultiIndex, Vec<(MultiIndex, C)>> = HashMap::new();
        for i in &level_keys {
            symf_cols.insert(i.clone(), sym_column(&f_forms, i, d));
        }
        let s_keys = indices_of_degree(s, m);
        for k in 0..e {
            let seed = MultiIndex::unit(d, r + k);
            let mu_k = blocks.mu[k].clone();
            // Injection columns for the normal-form unknowns at this level.
            let inj_forms = {
                let mut tuple: Vec<Series<C>> = (0..r)
                    .map(|j| Series::variable(j, d, n_trunc))
                    .collect();
                tuple.extend(phi.iter().cloned());
                linear_forms(&tuple, tols.coeff)
            };
            let mut inj_cols: HashMap<MultiIndex, Vec<(MultiIndex, C)>> = HashMap::new();
            for w in &s_keys {
                inj_cols.insert(w.clone(), sym_column(&inj_forms, w, d));
            }
            let eq = primary_eq_series(f, blocks, &phi, &target, m)?;
            let mut rvals: BTreeMap<MultiIndex, C> = BTreeMap::new();
            for (n, c) in eq[k].degree_slice(m) {
                rvals.insert(n, c);
            }
            let keys: Vec<MultiIndex> = level_keys
                .iter()
                .filter(|n| !(m == 1 && **n == seed))
                .cloned()
                .collect();
            let mut pending: BTreeSet<MultiIndex> = keys.iter().cloned().collect();
            let groups = group_level_keys(&keys, blocks, &weights);
            let rget = |rv: &BTreeMap<MultiIndex, C>, n: &MultiIndex| {
                rv.get(n).cloned().unwrap_or_else(C::zero)
            };
            let propagate_phi = |rv: &mut BTreeMap<MultiIndex, C>,
                                     pending: &BTreeSet<MultiIndex>,
                                     i: &MultiIndex,
                                     val: &C| {
                for (n2, c) in &symf_cols[i] {
                    if pending.contains(n2) {
                        let cur = rget(rv, n2);
                        rv.insert(n2.clone(), cur.sub(&c.mul(val)));
                    }
                }
            };
            for group in &groups.groups {
                let first = &group[0];
                if !first.supported_in(0, s) {
                    // Scalar case: (n_y, n_z) ≠ 0, coefficient μ^k.
                    let val = rget(&rvals, first)
                        .neg()
                        .mul(&mu_k.inv().expect("μ ≠ 0"));
                    pending.remove(first);
                    if !val.is_zero(0.0) {
                        phi[k].add_term(first.clone(), val.clone());
                        propagate_phi(&mut rvals, &pending, first, &val);
                    }
                    continue;
                }
                // Orbit case over the periodic permutation.
                let members = group;
                let eta_t = members.len();
                let couplings: Vec<C> = (0..eta_t)
                    .map(|l| {
                        column_entry(&symf_cols[&members[(l + 1) % eta_t]], &members[l])
                    })
                    .collect();
                let mut prod_c = C::one();
                for c in &couplings {
                    prod_c = prod_c.mul(c);
                }
                let mu_pow = mu_k.pow_usize(eta_t);
                let det = mu_pow.sub(&prod_c);
                let scale = mu_pow.abs().max(prod_c.abs()).max(1e-30);
                let resonant_det = if C::EXACT {
                    det.is_zero(0.0)
                } else {
                    det.abs() <= tols.res * scale
                };
                let reported = members.iter().any(|n| {
                    report.is_primary(k + 1, &n.slice(0, r), &n.slice(r, s))
                });
                if resonant_det && !reported {
                    return Err(SolverError::ToleranceMismatch(format!(
                        "primary orbit at {} (coordinate {}) is singular but not \
                         listed as resonant",
                        members[0],
                        k + 1
                    )));
                }
                let keep = resonant_det || (report.declared && reported);
                for n in members {
                    pending.remove(n);
                }
                if keep {
                    for n in members {
                        let w = n.slice(0, s);
                        let val = rget(&rvals, n).neg();
                        if val.is_zero(0.0) {
                            continue;
                        }
                        target[k].add_term(w.clone(), val.clone());
                        kept.push((k + 1, w.clone()));
                        // Injection spill onto lighter keys.
                        for (n2, c) in &inj_cols[&w] {
                            if pending.contains(n2) {
                                let cur = rget(&rvals, n2);
                                rvals.insert(n2.clone(), cur.add(&c.mul(&val)));
                            }
                        }
                    }
                } else {
                    let mut mat = CMat::<C>::zero(eta_t, eta_t);
                    let mut rhs = vec![C::zero(); eta_t];
                    for l in 0..eta_t {
                        mat[(l, l)] = mat[(l, l)].add(&mu_k);
                        let j = (l + 1) % eta_t;
                        mat[(l, j)] = mat[(l, j)].sub(&couplings[l]);
                        rhs[l] = rget(&rvals, &members[l]).neg();
                    }
                    let sol = mat.solve(&rhs, 0.0).ok_or_else(|| {
                        SolverError::Internal(format!(
                            "non-resonant cyclic system singular at {}",
                            members[0]
                        ))
                    })?;
                    for (l, val) in sol.into_iter().enumerate() {
                        if val.is_zero(0.0) {
                            continue;
                        }
                        phi[k].add_term(members[l].clone(), val.clone());
                        propagate_phi(&mut rvals, &pending, &members[l], &val);
                    }
                }
            }
            // Level check: the defect slice must now vanish.
            let eq2 = primary_eq_series(f, blocks, &phi, &target, m)?;
            let worst = eq2[k]
                .degree_slice(m)
                .iter()
                .map(|(_, c)| c.abs())
                .fold(0.0, f64::max);
            let gate = if C::EXACT { 0.0 } else { tols.res.max(1e-12) * 100.0 };
            if worst > gate {
                return Err(SolverError::Internal(format!(
                    "primary level (k={}, m={m}) left defect {worst:.3e}",
                    k + 1
                )));
            }
        }
    }

    // Assemble Φ from the induction and transport the germ.
    let mut phi_total: Vec<Series<C>> = identity_tuple(d, n_trunc);
    for k in 0..e {
        phi_total[r + k] = phi[k].clone();
    }
    let mut germ_mid = conjugate_germ(f, &phi_total)?;

    // Step 2: per-coordinate geometric tail sums for everything the
    // polynomial stage left above the cutoff.
    let mut tail_iterations = 0usize;
    if cutoff < n_trunc {
        let n_max = tail_iteration_cap(blocks.spectral_radius, tols.series);
        for k in 0..e {
            let vk = r + k;
            let comp = germ_mid.component(vk).clone();
            let mut tail = Series::zero(d, n_trunc);
            for (n, c) in comp.terms() {
                if n.degree() > cutoff {
                    tail.set_term(n.clone(), c.clone());
                }
            }
            if tail.is_zero_tol(tols.series) {
                continue;
            }
            let mu_inv = blocks.mu[k].inv().expect("μ ≠ 0");
            let mut acc = Series::zero(d, n_trunc);
            let mut cur = tail;
            let mut factor = mu_inv.clone();
            let mut converged = false;
            for it in 1..=n_max {
                let term = cur.scale(&factor);
                acc = acc.add(&term)?;
                tail_iterations = tail_iterations.max(it);
                if term.max_abs() < tols.series {
                    converged = true;
                    break;
                }
                cur = cur.compose(germ_mid.components())?;
                factor = factor.mul(&mu_inv);
            }
            if !converged {
                return Err(SolverError::NonConvergence {
                    pass: "primary tail",
                    iterations: n_max,
                    increment: acc.max_abs(),
                });
            }
            let mut stage = identity_tuple::<C>(d, n_trunc);
            stage[vk] = stage[vk].add(&acc)?;
            germ_mid = conjugate_germ(&germ_mid, &stage)?;
            phi_total = compose_tuple(&stage, &phi_total)?;
        }
    }

    // Pin the v-components to the solved normal form; the residual check
    // then measures the truncation error honestly.
    let mut comps = germ_mid.components().to_vec();
    for k in 0..e {
        let mut v = Series::zero(d, n_trunc);
        for (w, c) in target[k].terms() {
            let mut n = w.0.clone();
            n.extend(std::iter::repeat(0).take(d - s));
            v.set_term(MultiIndex(n), c.clone());
        }
        comps[r + k] = v;
    }
    let germ = germ_mid.with_components(comps)?;
    kept.retain(|(k, w)| {
        !target[*k - 1].coeff(w).is_zero(tols.coeff) && *w != MultiIndex::unit(s, r + *k - 1)
    });
    kept.sort();
    kept.dedup();
    Ok(PrimaryOutcome { phi: phi_total, germ, kept, tail_iterations })
}
