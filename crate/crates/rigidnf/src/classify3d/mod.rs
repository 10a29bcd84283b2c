//! Classification of normalized 3-dimensional germs.
//!
//! A normalized germ is re-ordered into display coordinates `X, Y, Z` by
//! decreasing eigenvalue modulus and matched against the classification
//! table by the key `(q, r, s, η, critical shape)`. Two families
//! (`s + p = 1`) admit no explicit normal form and come back unresolved.
//! In float mode, free unit coefficients are canonicalized to 1 by a
//! diagonal rescale wherever the table's rank conditions allow.

pub mod fixtures;

use std::collections::BTreeMap;

use num::complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::germ::GermMap;
use crate::linalg::CMat;
use crate::multiseries::{Coeff, MultiIndex, Series};
use crate::normalizer::PipelineRun;

pub use fixtures::{table_fixtures, TableFixture};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("classifier requires dimension 3, got {0}")]
    WrongDimension(usize),
    #[error("normalized germ matches no table row: q={q}, r={r}, s={s}, eta={eta}, crit={crit:?}")]
    NoRow { q: usize, r: usize, s: usize, eta: usize, crit: Vec<usize> },
    #[error("normalized germ violates the matched row's shape: {0}")]
    ShapeMismatch(String),
}

/// One classified germ.
#[derive(Clone, Debug, Serialize)]
pub struct ClassRow {
    pub form_id: String,
    pub q: usize,
    pub r: usize,
    pub s: usize,
    pub eta: usize,
    /// Display positions (0-based) of the critical hyperplanes.
    pub crit_shape: Vec<usize>,
    pub resolved: bool,
    /// Normal-form components in display coordinates X, Y, Z.
    pub normal_form: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

const DISPLAY: [&str; 3] = ["X", "Y", "Z"];

struct RowSpec {
    id: &'static str,
    q: usize,
    r: usize,
    s: usize,
    eta: usize,
    crit: &'static [usize],
    resolved: bool,
}

const ROWS: &[RowSpec] = &[
    RowSpec { id: "q0_r0_s3_pd", q: 0, r: 0, s: 3, eta: 1, crit: &[], resolved: true },
    RowSpec { id: "q1_r0_s0", q: 1, r: 0, s: 0, eta: 1, crit: &[0], resolved: false },
    RowSpec { id: "q1_r0_s1", q: 1, r: 0, s: 1, eta: 1, crit: &[1], resolved: true },
    RowSpec { id: "q1_r1_s1", q: 1, r: 1, s: 1, eta: 1, crit: &[0], resolved: false },
    RowSpec { id: "q1_r1_s2_critX", q: 1, r: 1, s: 2, eta: 1, crit: &[0], resolved: true },
    RowSpec { id: "q1_r1_s2_critY", q: 1, r: 1, s: 2, eta: 1, crit: &[1], resolved: true },
    RowSpec { id: "q2_r0_s0", q: 2, r: 0, s: 0, eta: 1, crit: &[0, 1], resolved: true },
    RowSpec { id: "q2_r0_s1", q: 2, r: 0, s: 1, eta: 1, crit: &[1, 2], resolved: true },
    RowSpec { id: "q2_r1_s1", q: 2, r: 1, s: 1, eta: 1, crit: &[0, 1], resolved: true },
    RowSpec { id: "q2_r1_s2_critXZ", q: 2, r: 1, s: 2, eta: 1, crit: &[0, 2], resolved: true },
    RowSpec { id: "q2_r1_s2_critYZ", q: 2, r: 1, s: 2, eta: 1, crit: &[1, 2], resolved: true },
    RowSpec { id: "q2_r2_s2_eta1", q: 2, r: 2, s: 2, eta: 1, crit: &[0, 1], resolved: true },
    RowSpec { id: "q2_r2_s2_eta2", q: 2, r: 2, s: 2, eta: 2, crit: &[0, 1], resolved: true },
    RowSpec { id: "q3_r0_s0", q: 3, r: 0, s: 0, eta: 1, crit: &[0, 1, 2], resolved: true },
    RowSpec { id: "q3_r1_s1", q: 3, r: 1, s: 1, eta: 1, crit: &[0, 1, 2], resolved: true },
    RowSpec { id: "q3_r2_s2_eta1", q: 3, r: 2, s: 2, eta: 1, crit: &[0, 1, 2], resolved: true },
    RowSpec { id: "q3_r2_s2_eta2", q: 3, r: 2, s: 2, eta: 2, crit: &[0, 1, 2], resolved: true },
];

/// Match a completed pipeline run against the table.
pub fn classify<C: Coeff>(run: &PipelineRun<C>) -> Result<ClassRow, ClassifyError> {
    let blocks = &run.blocks;
    let d = blocks.dim;
    if d != 3 {
        return Err(ClassifyError::WrongDimension(d));
    }
    let (q, r, s) = (blocks.q, blocks.r, blocks.s());
    let eta = blocks.eta;
    // Modulus attached to each internal coordinate.
    let mut modulus = vec![0.0f64; d];
    for j in 0..r {
        modulus[j] = blocks.xi[j].abs().powf(1.0 / eta as f64);
    }
    for k in 0..blocks.e {
        modulus[r + k] = blocks.mu[k].abs();
    }
    // Display permutation: stable sort by decreasing modulus.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| modulus[b].partial_cmp(&modulus[a]).unwrap().then(a.cmp(&b)));
    let mut display_perm = vec![0usize; d];
    for (pos, &internal) in order.iter().enumerate() {
        display_perm[internal] = pos;
    }
    let mut crit: Vec<usize> = (0..r)
        .map(|j| display_perm[j])
        .chain((s..s + blocks.p).map(|j| display_perm[j]))
        .collect();
    crit.sort();
    let row = ROWS
        .iter()
        .find(|rs| rs.q == q && rs.r == r && rs.s == s && rs.eta == eta && rs.crit == crit)
        .ok_or(ClassifyError::NoRow { q, r, s, eta, crit: crit.clone() })?;

    let mut germ = run.certificate.normalized.permute_coords(&display_perm);
    let mut notes: Vec<String> = Vec::new();
    if !C::EXACT {
        if let Some(kappa) = canonical_rescale(&germ, row, &crit) {
            germ = diagonal_rescale(&germ, &kappa);
            notes.push("free unit coefficients canonicalized by diagonal rescale".into());
        }
    } else {
        notes.push("canonical rescale skipped in exact mode; raw coefficients reported".into());
    }

    let mut parameters = extract_parameters(&germ, run, row, &display_perm);
    parameters.insert("eta".into(), eta.to_string());
    check_row_constraints(row, &parameters, &germ).map_err(ClassifyError::ShapeMismatch)?;
    if !row.resolved {
        notes.push(
            "unresolved family (s+p = 1): the geometry of the critical images obstructs \
             any explicit normal form"
                .into(),
        );
    }
    let vars: Vec<String> = DISPLAY.iter().map(|s| s.to_string()).collect();
    let normal_form = if row.resolved {
        germ.components()
            .iter()
            .map(|c| crate::lang::series_to_expr(c, &vars))
            .collect()
    } else {
        // The table pins only the critical component in these families.
        germ.components()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    crate::lang::series_to_expr(c, &vars)
                } else {
                    "?".to_string()
                }
            })
            .collect()
    };
    Ok(ClassRow {
        form_id: row.id.to_string(),
        q,
        r,
        s,
        eta,
        crit_shape: crit,
        resolved: row.resolved,
        normal_form,
        parameters,
        notes,
    })
}

/// Conjugate by `x ↦ κ x`: the coefficient of `x^n` in component `i`
/// becomes `c · κ_i / κ^n`.
fn diagonal_rescale<C: Coeff>(germ: &GermMap<C>, kappa: &[C]) -> GermMap<C> {
    let d = germ.dim();
    let comps: Vec<Series<C>> = (0..d)
        .map(|i| {
            let mut out = Series::zero(d, germ.trunc());
            for (n, c) in germ.component(i).terms() {
                let mut factor = kappa[i].clone();
                for (v, &e) in n.0.iter().enumerate() {
                    if e > 0 {
                        factor = factor.mul(
                            &kappa[v].inv().expect("rescale factors nonzero").pow_usize(e as usize),
                        );
                    }
                }
                out.set_term(n.clone(), c.mul(&factor));
            }
            out
        })
        .collect();
    germ.with_components(comps).expect("rescale preserves germ structure")
}

/// Greedy canonical rescale: walk the row's normalization targets in
/// preference order, keeping each log-linear equation only while the system
/// stays solvable, then solve for κ.
fn canonical_rescale<C: Coeff>(
    germ: &GermMap<C>,
    row: &RowSpec,
    _crit: &[usize],
) -> Option<Vec<C>> {
    let d = germ.dim();
    let targets = rescale_targets(germ, row);
    if targets.is_empty() {
        return None;
    }
    // Equations Σ_v (n_v - δ_{v,comp}) ln κ_v = ln c, solved greedily.
    let mut rows_m: Vec<Vec<Complex64>> = Vec::new();
    let mut rhs: Vec<Complex64> = Vec::new();
    for (comp, mono) in targets {
        let c = germ.component(comp).coeff(&mono).to_c64();
        if c.norm() == 0.0 {
            continue;
        }
        let mut coefs = vec![Complex64::new(0.0, 0.0); d];
        for (v, &e) in mono.0.iter().enumerate() {
            coefs[v] += Complex64::new(e as f64, 0.0);
        }
        coefs[comp] -= Complex64::new(1.0, 0.0);
        let ln_c = Complex64::new(c.norm().ln(), c.arg());
        let mut trial_rows = rows_m.clone();
        let mut trial_rhs = rhs.clone();
        trial_rows.push(coefs);
        trial_rhs.push(ln_c);
        let mat = CMat::<Complex64>::from_rows(&trial_rows);
        if mat.solve_min_norm(&trial_rhs, 1e-9).is_some() {
            rows_m = trial_rows;
            rhs = trial_rhs;
        }
    }
    if rows_m.is_empty() {
        return None;
    }
    let mat = CMat::<Complex64>::from_rows(&rows_m);
    let ln_kappa = mat.solve_min_norm(&rhs, 1e-9)?;
    Some(ln_kappa.iter().map(|l| C::from_c64(l.exp())).collect())
}

/// Normalization targets per row, in preference order: coefficients the
/// table displays as bare monomials first, then the rank-condition extras.
fn rescale_targets<C: Coeff>(germ: &GermMap<C>, row: &RowSpec) -> Vec<(usize, MultiIndex)> {
    let d = germ.dim();
    let mut targets = Vec::new();
    // Monomial components (single-term, degree ≥ 2 with no self-linear
    // part) are displayed bare: normalize their coefficient.
    // Coefficient symbols the table keeps (β, ν) are appended afterwards so
    // the greedy pass uses leftover freedom on them.
    let mut bare: Vec<(usize, MultiIndex)> = Vec::new();
    let mut symbolic: Vec<(usize, MultiIndex)> = Vec::new();
    for i in 0..d {
        let comp = germ.component(i);
        if comp.len() == 0 {
            continue;
        }
        // The z-like affine component: νX^lY^mZ + ω — normalize ν.
        if let Some((n, _)) = comp
            .terms()
            .find(|(n, _)| n.0[d - 1] == 1 && n.degree() >= 2)
        {
            if i == d - 1 {
                symbolic.push((i, n.clone()));
                continue;
            }
        }
        if comp.len() == 1 {
            let (n, _) = comp.terms().next().unwrap();
            if n.degree() >= 2 || (n.degree() == 1 && n.0[i] == 0) {
                // A pure monomial component that is not a plain eigenvalue
                // term: the table displays those bare only when the
                // coefficient can be scaled away; treat λx and the 2-cycle
                // αy terms as symbolic (they are conjugacy invariants).
                if n.degree() >= 2 {
                    bare.push((i, n.clone()));
                }
            }
        }
    }
    targets.extend(bare);
    targets.extend(symbolic);
    // ω − εY ∈ m²: scale the linear Y-coefficient of the affine free term
    // to 1 with whatever freedom remains.
    if matches!(row.id, "q1_r0_s1" | "q2_r1_s1") {
        let z = d - 1;
        let y_lin = MultiIndex::unit(d, 1);
        if !germ.component(z).coeff(&y_lin).is_zero(germ.tols.coeff) {
            targets.push((z, y_lin));
        }
    }
    targets
}

fn extract_parameters<C: Coeff>(
    germ: &GermMap<C>,
    run: &PipelineRun<C>,
    row: &RowSpec,
    display_perm: &[usize],
) -> BTreeMap<String, String> {
    let blocks = &run.blocks;
    let d = germ.dim();
    let mut p = BTreeMap::new();
    // Eigenvalue data in display positions.
    for j in 0..blocks.r {
        if blocks.eta == 1 {
            p.insert(format!("lambda{}", display_perm[j] + 1), blocks.alpha[j].render());
        } else {
            p.insert(format!("alpha{}", j + 1), blocks.alpha[j].render());
        }
    }
    for k in 0..blocks.e {
        p.insert(
            format!("lambda{}", display_perm[blocks.r + k] + 1),
            blocks.mu[k].render(),
        );
    }
    if blocks.eta == 2 {
        // The cycle data fixes λ¹λ² = −α¹α².
        let prod = blocks.alpha.iter().fold(C::one(), |a, b| a.mul(b));
        p.insert(
            "lambda_product_constraint".into(),
            format!("lambda1*lambda2 = -(alpha1*alpha2) = {}", prod.neg().render()),
        );
    }
    // Exponent data off the term tables.
    for i in 0..d {
        let comp = germ.component(i);
        for (n, c) in comp.terms() {
            if n.0[i] >= 1 && n.degree() >= 2 && i >= row.s.min(d) {
                // monomial block exponents
                p.insert(
                    format!("exponents_{}", DISPLAY[i]),
                    format!("{n}"),
                );
                p.insert(format!("coefficient_{}", DISPLAY[i]), c.render());
                break;
            }
        }
    }
    // Resonant-slot flags: table representatives.
    let rho_slots: Vec<String> = run
        .kept_primary
        .iter()
        .map(|(k, n)| format!("k={k} n={n}"))
        .collect();
    p.insert("rho".into(), if rho_slots.is_empty() { "0".into() } else { "1".into() });
    if !rho_slots.is_empty() {
        p.insert("rho_slots".into(), rho_slots.join("; "));
    }
    let g_slots: Vec<String> = run.kept_secondary.iter().map(|n| format!("{n}")).collect();
    p.insert("g".into(), if g_slots.is_empty() { "0".into() } else { "1".into() });
    if !g_slots.is_empty() {
        p.insert("g_slots".into(), g_slots.join("; "));
    }
    // Affine data: ν and the z-monomial; ε from the linear Y-coefficient of ω.
    if run.affine_applied {
        let z = d - 1;
        let zc = germ.component(z);
        if let Some((n, c)) = zc.terms().find(|(n, _)| n.0[z] == 1) {
            p.insert("nu".into(), c.render());
            p.insert("z_monomial".into(), format!("{n}"));
        }
        let eps = zc.coeff(&MultiIndex::unit(d, 1));
        p.insert(
            "epsilon".into(),
            if eps.is_zero(germ.tols.coeff) { "0".into() } else { "1".into() },
        );
        let omega: Vec<String> = zc
            .terms()
            .filter(|(n, _)| n.0[z] == 0)
            .map(|(n, c)| format!("{}*{}", c.render(), n))
            .collect();
        if !omega.is_empty() {
            p.insert("omega_terms".into(), omega.join(" + "));
        }
    }
    p
}

/// The table's numeric side conditions; violations signal a normalization
/// bug rather than an input error.
fn check_row_constraints<C: Coeff>(
    row: &RowSpec,
    _params: &BTreeMap<String, String>,
    germ: &GermMap<C>,
) -> Result<(), String> {
    let deg_of = |i: usize| -> u32 {
        germ.component(i)
            .terms()
            .map(|(n, _)| n.degree())
            .next()
            .unwrap_or(0)
    };
    match row.id {
        "q1_r0_s0" => {
            if deg_of(0) < 2 {
                return Err("critical component must have degree ≥ 2".into());
            }
        }
        "q1_r0_s1" => {
            // Y-component Y^d, d ≥ 2.
            let comp = germ.component(1);
            if comp.len() != 1 || deg_of(1) < 2 {
                return Err("y-component must be a monomial of degree ≥ 2".into());
            }
        }
        "q3_r0_s0" => {
            for i in 0..3 {
                if deg_of(i) < 2 {
                    return Err(format!("column {i} must have total degree ≥ 2"));
                }
            }
        }
        _ => {}
    }
    Ok(())
}
