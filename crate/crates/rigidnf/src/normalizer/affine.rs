//! The affine pass for s+p = d−1: make the last coordinate affine in z.
//!
//! The z-component is put in the form `ν x^l y^m z (1+ε) + ω(x, y)` by
//! factoring `∂h/∂z` as monomial×unit, then `ε` is killed by the fixed
//! point `φ = Σ T^{∘n} ε` of the integral operator
//! `Tψ = (1+ε)·ψ∘f + ω·∫₀¹ ∂ψ/∂z(f(x,y,τz))(1+ζ(x,y,τz)) dτ`,
//! with `ζ = ε + z ∂ε/∂z`. The new free term is
//! `ω̃ = ω·(1 + φ∘f(x,y,0))`.

use crate::germ::{monomial_unit_factor, BlockStructure, GermMap};
use crate::multiseries::{identity_tuple, Coeff, MultiIndex, Series};

use super::solver::SolverError;
use super::{tail_iteration_cap, PassOptions};

pub struct AffineOutcome<C: Coeff> {
    pub phi: Vec<Series<C>>,
    pub germ: GermMap<C>,
    pub iterations: usize,
    /// The extracted (ν, x^l y^m) data of the z-component.
    pub nu: C,
    pub z_monomial: MultiIndex,
}

/// Decomposition `h = ν x^l y^m z (1+ε) + ω(x,y)` of the z-component.
pub(crate) struct AffineForm<C: Coeff> {
    pub nu: C,
    pub monomial: MultiIndex,
    pub epsilon: Series<C>,
    pub zeta: Series<C>,
    pub omega: Series<C>,
}

pub(crate) fn extract_affine_form<C: Coeff>(
    h: &Series<C>,
    z_idx: usize,
    tol: f64,
) -> Result<AffineForm<C>, SolverError> {
    let dh = h.partial_derivative(z_idx)?;
    let (mono, unit) = monomial_unit_factor(&dh, tol).map_err(|e| {
        SolverError::Precondition(format!("z-component not in reducible form: {e}"))
    })?;
    if mono.0[z_idx] != 0 {
        return Err(SolverError::Precondition(
            "∂h/∂z carries a z factor; z-component is not ν x^l y^m z(1+ε) + ω".into(),
        ));
    }
    if mono.degree() == 0 {
        return Err(SolverError::Precondition(
            "∂h/∂z is a unit: z would carry a nonzero eigenvalue".into(),
        ));
    }
    let nu = unit.constant_term();
    let nu_inv = nu.inv().expect("unit constant nonzero");
    // The division by x^l y^m is exact on the stored terms; keep ζ and ε at
    // the truncation of h itself (stored series are the working objects).
    let mut zeta = unit.scale(&nu_inv).with_trunc(h.trunc());
    zeta.add_term(MultiIndex::zero(h.dim()), C::one().neg());
    super::solver::snap_zero_constant(&mut zeta, tol.max(1e-9), "z-unit extraction")?;
    let epsilon = zeta.tau_integral(z_idx)?;
    let omega = h.subst_zero(z_idx)?;
    Ok(AffineForm { nu, monomial: mono, epsilon, zeta, omega })
}

/// One application of the T operator.
fn apply_t<C: Coeff>(
    psi: &Series<C>,
    f: &[Series<C>],
    form: &AffineForm<C>,
    z_idx: usize,
    one: &Series<C>,
) -> Result<Series<C>, SolverError> {
    let t = psi.trunc();
    let first = one.add(&form.epsilon)?.mul(&psi.compose(f)?)?;
    let dpsi_f = psi.partial_derivative(z_idx)?.compose(f)?;
    let integrand = dpsi_f.mul(&one.add(&form.zeta)?)?;
    // ω has positive order, so the product below never consumes the missing
    // top degree of the differentiated factor; relabel before multiplying.
    let integral = integrand.tau_integral(z_idx)?.with_trunc(t);
    Ok(first.add(&form.omega.mul(&integral)?)?)
}

pub fn pass_affine<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
    opts: &PassOptions,
) -> Result<AffineOutcome<C>, SolverError> {
    let d = f.dim();
    let n_trunc = f.trunc();
    let (s, p) = (blocks.s(), blocks.p);
    let tols = f.tols;
    if s + p != d - 1 {
        return Err(SolverError::Precondition(format!(
            "pass_affine needs s+p = d-1 (got s={s}, p={p}, d={d})"
        )));
    }
    let z_idx = d - 1;
    let one = Series::one(d, n_trunc);
    let form = extract_affine_form(f.component(z_idx), z_idx, tols.coeff)?;

    // φ = Σ_{n≥0} T^{∘n} ε with the series stop rule.
    let n_max = opts
        .n_max
        .unwrap_or_else(|| tail_iteration_cap(blocks.spectral_radius, tols.series));
    let mut acc = form.epsilon.clone();
    let mut cur = form.epsilon.clone();
    let mut iterations = 0usize;
    let mut converged = cur.is_zero_tol(0.0);
    if !converged {
        for it in 1..=n_max {
            cur = apply_t(&cur, f.components(), &form, z_idx, &one)?;
            acc = acc.add(&cur)?;
            iterations = it;
            if cur.max_abs() < tols.series {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(SolverError::NonConvergence {
            pass: "affine T-iteration",
            iterations: n_max,
            increment: cur.max_abs(),
        });
    }

    // Φ = (x, y, z(1+φ)).
    let mut phi_tuple = identity_tuple::<C>(d, n_trunc);
    phi_tuple[z_idx] = phi_tuple[z_idx].mul(&one.add(&acc)?)?;

    // ω̃ = ω · (1 + φ∘f(x,y,0)); z̃-part = ν x^l y^m z + ω̃.
    let phi_f0 = acc.compose(f.components())?.subst_zero(z_idx)?;
    let omega_t = form.omega.mul(&one.add(&phi_f0)?)?;
    let mut z_mono = form.monomial.clone();
    z_mono.0[z_idx] = 1;
    let z_new = Series::monomial(z_mono, form.nu.clone(), n_trunc).add(&omega_t)?;
    let mut comps = f.components().to_vec();
    comps[z_idx] = z_new;
    let germ = f.with_components(comps)?;
    Ok(AffineOutcome {
        phi: phi_tuple,
        germ,
        iterations,
        nu: form.nu,
        z_monomial: form.monomial,
    })
}
