//! The secondary-resonance pass: normalize the y-block to
//! `β x^E y^D (1 + g̃(x))` with g̃ supported on secondary resonant slots.
//!
//! Step 1 solves `(1+g)(1+φ∘f) = (1+φ)^D (1+g̃)` by total degree; keys with
//! y- or z-support give `φ_n D = lot` (always solvable, det D ≠ 0), pure
//! x-keys couple along P-orbits into block-cyclic systems that are singular
//! exactly at secondary resonances. Step 2 kills the analytic tail with the
//! matrix-exponent product `1+φ = ∏ (1+e∘f^{∘n-1})^{D^{-n}}`, summed
//! through logarithms.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::germ::{BlockStructure, GermMap};
use crate::linalg::CMat;
use crate::multiseries::{
    compose_tuple, identity_tuple, indices_of_degree, Coeff, MultiIndex, RationalMatrix, Series,
};
use crate::resonance::ResonanceReport;

use super::solver::{
    column_entry, group_level_keys, linear_forms, snap_zero_constant, sym_column,
    variable_weights, SolverError,
};
use super::{conjugate_germ, tail_iteration_cap, PassOptions};

pub struct SecondaryOutcome<C: Coeff> {
    pub phi: Vec<Series<C>>,
    pub germ: GermMap<C>,
    /// Kept slots `n_x` with a nonzero coefficient in some g̃ component.
    pub kept: Vec<MultiIndex>,
    pub tail_iterations: usize,
}

/// Unit factors of the y-components: `y_k∘f / (β_k x^{E_k} y^{D_k})`,
/// which must be units `1 + g^k`.
pub(crate) fn y_units<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
) -> Result<Vec<Series<C>>, SolverError> {
    let s = blocks.s();
    let mut out = Vec::with_capacity(blocks.p);
    for k in 0..blocks.p {
        let comp = f.component(s + k);
        let mut mono = MultiIndex::zero(f.dim());
        for l in 0..blocks.r {
            mono.0[l] = blocks.c_block[(l, k)] as u32;
        }
        for l in 0..blocks.p {
            mono.0[s + l] = blocks.d_block[(l, k)] as u32;
        }
        let beta_inv = blocks.beta[k].inv().ok_or_else(|| {
            SolverError::Precondition(format!("zero unit constant β_{k}"))
        })?;
        let mut unit = Series::zero(f.dim(), f.trunc());
        for (n, c) in comp.terms() {
            match n.checked_sub(&mono) {
                Some(m) => unit.set_term(m, c.mul(&beta_inv)),
                None => {
                    if !c.is_zero(f.tols.coeff.max(f.tols.residual)) {
                        return Err(SolverError::Precondition(format!(
                            "y-component {k} has term {n} outside its monomial block"
                        )));
                    }
                }
            }
        }
        // Snap the round-off in β·β⁻¹ so the unit constant is exactly 1.
        let mut shifted = unit.sub(&Series::one(f.dim(), f.trunc()))?;
        snap_zero_constant(&mut shifted, f.tols.res, "y-unit extraction")?;
        let unit = shifted.add(&Series::one(f.dim(), f.trunc()))?;
        out.push(unit)
    }
    Ok(out)
}

/// Conjugacy defect of the secondary relation at truncation `t`:
/// `rhs^k = (1+φ)^{D e_k} (1 + g̃^k(x))`, `lhs^k = (1+g^k)(1+φ^k∘f)`.
pub(crate) fn secondary_eq_series<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
    g_units: &[Series<C>],
    phi: &[Series<C>],
    gtilde: &[Series<C>],
    t: u32,
) -> Result<Vec<Series<C>>, SolverError> {
    let d = f.dim();
    let s = blocks.s();
    let p = blocks.p;
    let one = Series::one(d, t);
    let f_t: Vec<Series<C>> = f.components().iter().map(|c| c.truncate_to(t)).collect();
    let units: Vec<Series<C>> = phi
        .iter()
        .map(|ph| one.add(&ph.truncate_to(t)))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(p);
    for k in 0..p {
        let mut rhs = Series::one(d, t);
        for (l, u) in units.iter().enumerate() {
            let e = blocks.d_block[(l, k)] as usize;
            if e > 0 {
                rhs = rhs.mul(&u.pow_usize(e)?)?;
            }
        }
        // g̃^k lives in the x-variables; embed into d variables.
        let mut gt = Series::one(d, t);
        for (w, c) in gtilde[k].terms() {
            if w.degree() > t {
                continue;
            }
            let mut n = w.0.clone();
            n.extend(std::iter::repeat(0).take(d - s));
            gt.add_term(MultiIndex(n), c.clone());
        }
        rhs = rhs.mul(&gt)?;
        let lhs = g_units[k]
            .truncate_to(t)
            .mul(&one.add(&phi[k].truncate_to(t).compose(&f_t)?)?)?;
        out.push(rhs.sub(&lhs)?);
    }
    Ok(out)
}

pub fn pass_secondary<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
    report: &ResonanceReport,
    opts: &PassOptions,
) -> Result<SecondaryOutcome<C>, SolverError> {
    if !blocks.split_done {
        return Err(SolverError::Precondition(
            "pass_secondary requires a Jordan-split germ".into(),
        ));
    }
    let d = f.dim();
    let n_trunc = f.trunc();
    let p = blocks.p;
    let s = blocks.s();
    let tols = f.tols;
    if p == 0 {
        return Ok(SecondaryOutcome {
            phi: identity_tuple(d, n_trunc),
            germ: f.clone(),
            kept: Vec::new(),
            tail_iterations: 0,
        });
    }
    let cutoff = opts.induction_cutoff(report.degree_bound, n_trunc, C::EXACT);

    let g_units = y_units(f, blocks)?;
    let mut phi: Vec<Series<C>> = vec![Series::zero(d, n_trunc); p];
    let mut gtilde: Vec<Series<C>> = vec![Series::zero(s, n_trunc); p];
    let mut kept: Vec<MultiIndex> = Vec::new();

    let weights = variable_weights(blocks)?;
    let f_forms = linear_forms(f.components(), tols.coeff);
    // D^T as a complex matrix: the scalar-case system per key.
    let mut dt_mat = CMat::<C>::zero(p, p);
    for kk in 0..p {
        for l in 0..p {
            dt_mat[(kk, l)] = C::from_ratio(blocks.d_block[(l, kk)], 1);
        }
    }

    for m in 1..=cutoff {
        let level_keys = indices_of_degree(d, m);
        let mut symf_cols: HashMap<MultiIndex, Vec<(MultiIndex, C)>> = HashMap::new();
        for i in &level_keys {
            symf_cols.insert(i.clone(), sym_column(&f_forms, i, d));
        }
        let eq = secondary_eq_series(f, blocks, &g_units, &phi, &gtilde, m)?;
        let mut rvals: Vec<BTreeMap<MultiIndex, C>> = (0..p)
            .map(|k| eq[k].degree_slice(m).into_iter().collect())
            .collect();
        let mut pending: BTreeSet<MultiIndex> = level_keys.iter().cloned().collect();
        let groups = group_level_keys(&level_keys, blocks, &weights);
        let rget = |rv: &[BTreeMap<MultiIndex, C>], k: usize, n: &MultiIndex| {
            rv[k].get(n).cloned().unwrap_or_else(C::zero)
        };
        for group in &groups.groups {
            let first = &group[0];
            if !first.supported_in(0, s) {
                // φ_n D = lot: one p×p solve for this key.
                let rhs: Vec<C> = (0..p).map(|k| rget(&rvals, k, first).neg()).collect();
                let sol = dt_mat.solve(&rhs, 0.0).ok_or_else(|| {
                    SolverError::Internal("det D ≠ 0 system refused to solve".into())
                })?;
                pending.remove(first);
                for (l, val) in sol.into_iter().enumerate() {
                    if val.is_zero(0.0) {
                        continue;
                    }
                    phi[l].add_term(first.clone(), val.clone());
                    for (n2, c) in &symf_cols[first] {
                        if pending.contains(n2) {
                            let cur = rget(&rvals, l, n2);
                            rvals[l].insert(n2.clone(), cur.sub(&c.mul(&val)));
                        }
                    }
                }
                continue;
            }
            // P-orbit block system.
            let members = group;
            let eta_t = members.len();
            let couplings: Vec<C> = (0..eta_t)
                .map(|l| column_entry(&symf_cols[&members[(l + 1) % eta_t]], &members[l]))
                .collect();
            let mut prod_c = C::one();
            for c in &couplings {
                prod_c = prod_c.mul(c);
            }
            // det(D^η̃ − Πc · Id) decides resonance.
            let d_pow = blocks.d_block.pow(eta_t);
            let mut test = CMat::<C>::zero(p, p);
            let mut scale = 1.0f64;
            for i in 0..p {
                let mut row_norm = 0.0f64;
                for j in 0..p {
                    test[(i, j)] = C::from_ratio(d_pow[(i, j)], 1);
                    row_norm += (d_pow[(i, j)] as f64).powi(2);
                }
                test[(i, i)] = test[(i, i)].sub(&prod_c);
                scale *= (row_norm.sqrt() + prod_c.abs()).max(1.0);
            }
            let det = test.det();
            let resonant_det = if C::EXACT {
                det.is_zero(0.0)
            } else {
                det.abs() <= tols.res * scale
            };
            let reported = members
                .iter()
                .any(|n| report.is_secondary(&n.slice(0, s)));
            if resonant_det && !reported {
                return Err(SolverError::ToleranceMismatch(format!(
                    "secondary orbit at {} is singular but not listed as resonant",
                    members[0]
                )));
            }
            let keep = resonant_det || (report.declared && reported);
            for n in members {
                pending.remove(n);
            }
            if keep {
                for n in members {
                    let w = n.slice(0, s);
                    let mut any = false;
                    for k in 0..p {
                        let val = rget(&rvals, k, n).neg();
                        if val.is_zero(0.0) {
                            continue;
                        }
                        gtilde[k].add_term(w.clone(), val);
                        any = true;
                    }
                    if any {
                        kept.push(w);
                    }
                }
            } else {
                // Dense cyclic block system in the pη̃ unknowns φ^k_{n^(l)}.
                let nn = p * eta_t;
                let mut mat = CMat::<C>::zero(nn, nn);
                let mut rhs = vec![C::zero(); nn];
                for l in 0..eta_t {
                    for k in 0..p {
                        let row = l * p + k;
                        for j in 0..p {
                            // Σ_j D[j][k] φ^j_{(l)}
                            mat[(row, l * p + j)] = mat[(row, l * p + j)]
                                .add(&C::from_ratio(blocks.d_block[(j, k)], 1));
                        }
                        let col = ((l + 1) % eta_t) * p + k;
                        mat[(row, col)] = mat[(row, col)].sub(&couplings[l]);
                        rhs[row] = rget(&rvals, k, &members[l]).neg();
                    }
                }
                let sol = mat.solve(&rhs, 0.0).ok_or_else(|| {
                    SolverError::Internal(format!(
                        "non-resonant secondary block singular at {}",
                        members[0]
                    ))
                })?;
                for l in 0..eta_t {
                    for k in 0..p {
                        let val = sol[l * p + k].clone();
                        if val.is_zero(0.0) {
                            continue;
                        }
                        phi[k].add_term(members[l].clone(), val.clone());
                        for (n2, c) in &symf_cols[&members[l]] {
                            if pending.contains(n2) {
                                let cur = rget(&rvals, k, n2);
                                rvals[k].insert(n2.clone(), cur.sub(&c.mul(&val)));
                            }
                        }
                    }
                }
            }
        }
        // Level check.
        let eq2 = secondary_eq_series(f, blocks, &g_units, &phi, &gtilde, m)?;
        let worst = (0..p)
            .flat_map(|k| eq2[k].degree_slice(m))
            .map(|(_, c)| c.abs())
            .fold(0.0, f64::max);
        let gate = if C::EXACT { 0.0 } else { tols.res.max(1e-12) * 100.0 };
        if worst > gate {
            return Err(SolverError::Internal(format!(
                "secondary level m={m} left defect {worst:.3e}"
            )));
        }
    }

    // Φ = (x, y(1+φ), z) from the induction.
    let mut phi_total = identity_tuple::<C>(d, n_trunc);
    for k in 0..p {
        let one = Series::one(d, n_trunc);
        phi_total[s + k] = phi_total[s + k].mul(&one.add(&phi[k])?)?;
    }
    let mut germ_mid = conjugate_germ(f, &phi_total)?;

    // Step 2: matrix-exponent product for the tail above the cutoff.
    let mut tail_iterations = 0usize;
    if cutoff < n_trunc {
        let units_mid = y_units(&germ_mid, blocks)?;
        // e := R / (1 + g̃) with R the over-cutoff part of the unit.
        let mut tail = Vec::with_capacity(p);
        let mut any = false;
        for (k, u) in units_mid.iter().enumerate() {
            let mut gt = Series::one(d, n_trunc);
            for (w, c) in gtilde[k].terms() {
                let mut n = w.0.clone();
                n.extend(std::iter::repeat(0).take(d - s));
                gt.add_term(MultiIndex(n), c.clone());
            }
            let r_part = u.sub(&gt)?;
            let mut e_k = r_part.mul(&gt.unit_inverse()?)?;
            snap_zero_constant(&mut e_k, tols.res, "secondary tail")?;
            if !e_k.is_zero_tol(tols.series) {
                any = true;
            }
            tail.push(e_k);
        }
        if any {
            let n_max = tail_iteration_cap(blocks.spectral_radius, tols.series);
            let d_rat = RationalMatrix::from_exponents(&blocks.d_block);
            let d_inv = d_rat.inverse().ok_or_else(|| {
                SolverError::Precondition("det D = 0 reached the secondary tail".into())
            })?;
            let mut d_inv_pow = RationalMatrix::identity(p);
            let mut log_sum = vec![Series::zero(d, n_trunc); p];
            let one = Series::one(d, n_trunc);
            let mut cur = tail;
            let mut converged = false;
            for it in 1..=n_max {
                d_inv_pow = d_inv_pow.matmul(&d_inv);
                let logs: Vec<Series<C>> = cur
                    .iter()
                    .map(|e_k| one.add(e_k).and_then(|u| u.unit_log()))
                    .collect::<Result<_, _>>()?;
                let mut increment = 0.0f64;
                for k in 0..p {
                    let mut acc = Series::zero(d, n_trunc);
                    for (l, lg) in logs.iter().enumerate() {
                        let q = &d_inv_pow[(l, k)];
                        if num::Zero::is_zero(q) {
                            continue;
                        }
                        acc = acc.add(&lg.scale(&C::from_big_ratio(q)))?;
                    }
                    increment = increment.max(acc.max_abs());
                    log_sum[k] = log_sum[k].add(&acc)?;
                }
                tail_iterations = it;
                if increment < tols.series {
                    converged = true;
                    break;
                }
                cur = cur
                    .iter()
                    .map(|e_k| e_k.compose(germ_mid.components()))
                    .collect::<Result<_, _>>()?;
            }
            if !converged {
                return Err(SolverError::NonConvergence {
                    pass: "secondary tail",
                    iterations: n_max,
                    increment: tols.series,
                });
            }
            let mut stage = identity_tuple::<C>(d, n_trunc);
            for k in 0..p {
                let unit = log_sum[k].unit_exp()?;
                stage[s + k] = stage[s + k].mul(&unit)?;
            }
            germ_mid = conjugate_germ(&germ_mid, &stage)?;
            phi_total = compose_tuple(&stage, &phi_total)?;
        }
    }

    // Pin the y-components to β x^E y^D (1 + g̃(x)).
    let mut comps = germ_mid.components().to_vec();
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
        comps[s + k] = Series::monomial(mono, blocks.beta[k].clone(), n_trunc)
            .mul(&unit)?;
    }
    let germ = germ_mid.with_components(comps)?;
    kept.retain(|w| {
        (0..p).any(|k| !gtilde[k].coeff(w).is_zero(tols.coeff))
    });
    kept.sort();
    kept.dedup();
    Ok(SecondaryOutcome { phi: phi_total, germ, kept, tail_iterations })
}
