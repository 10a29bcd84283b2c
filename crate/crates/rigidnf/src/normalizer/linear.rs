//! The linear-part pass: conjugate the u-block to the exact monomial form
//! `α u^B` by the truncated product `1 + φ = ∏ (1 + θ∘f^{∘n-1})`, with the
//! factors routed along the inverse permutation so that each coordinate's
//! functional equation `(1+θ^k)(1+φ^k∘f) = 1+φ^{b(k)}` telescopes. The
//! remaining components are transported through Φ^{-1}.

use crate::germ::{BlockStructure, GermMap};
use crate::multiseries::{identity_tuple, Coeff, MultiIndex, Series};

use super::solver::SolverError;
use super::{conjugate_germ, tail_iteration_cap, PassOptions};

pub struct LinearOutcome<C: Coeff> {
    pub phi: Vec<Series<C>>,
    pub germ: GermMap<C>,
    pub iterations: usize,
}

/// Extract θ: `u_k∘f = α_k u_{b(k)} (1 + θ^k)`.
fn theta<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
) -> Result<Vec<Series<C>>, SolverError> {
    let d = f.dim();
    let mut out = Vec::with_capacity(blocks.r);
    for k in 0..blocks.r {
        let mono = MultiIndex::unit(d, blocks.b_map[k]);
        let alpha_inv = blocks.alpha[k]
            .inv()
            .ok_or_else(|| SolverError::Precondition(format!("zero unit constant α_{k}")))?;
        let mut unit = Series::zero(d, f.trunc());
        for (n, c) in f.component(k).terms() {
            match n.checked_sub(&mono) {
                Some(m) => unit.set_term(m, c.mul(&alpha_inv)),
                None => {
                    return Err(SolverError::Precondition(format!(
                        "u-component {k} has term {n} outside its monomial"
                    )))
                }
            }
        }
        unit.add_term(MultiIndex::zero(d), C::one().neg());
        super::solver::snap_zero_constant(&mut unit, f.tols.res, "theta extraction")?;
        out.push(unit);
    }
    Ok(out)
}

pub fn pass_linear<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
    opts: &PassOptions,
) -> Result<LinearOutcome<C>, SolverError> {
    let d = f.dim();
    let n_trunc = f.trunc();
    let r = blocks.r;
    let tols = f.tols;
    if r == 0 {
        return Ok(LinearOutcome {
            phi: identity_tuple(d, n_trunc),
            germ: f.clone(),
            iterations: 0,
        });
    }
    let th = theta(f, blocks)?;
    // b_inv: b_map[b_inv[j]] = j.
    let mut b_inv = vec![0usize; r];
    for (k, &bk) in blocks.b_map.iter().enumerate() {
        b_inv[bk] = k;
    }
    let n_max = opts
        .n_max
        .unwrap_or_else(|| tail_iteration_cap(blocks.spectral_radius, tols.series));
    // products[j] accumulates ∏_n (1 + θ^{b^{-n}(j)} ∘ f^{∘n-1}).
    let mut products = vec![Series::one(d, n_trunc); r];
    let mut cur = th;
    // source[n][j] = b^{-n}(j), updated in place.
    let mut source: Vec<usize> = (0..r).collect();
    let mut iterations = 0usize;
    let mut converged = false;
    let one = Series::one(d, n_trunc);
    for it in 1..=n_max {
        for j in 0..r {
            source[j] = b_inv[source[j]];
        }
        let increment = cur.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
        if increment == 0.0 {
            converged = true;
            iterations = it - 1;
            break;
        }
        for j in 0..r {
            let factor = one.add(&cur[source[j]])?;
            products[j] = products[j].mul(&factor)?;
        }
        iterations = it;
        if increment < tols.series {
            converged = true;
            break;
        }
        cur = cur
            .iter()
            .map(|s| s.compose(f.components()))
            .collect::<Result<_, _>>()?;
    }
    if !converged {
        let increment = cur.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
        return Err(SolverError::NonConvergence {
            pass: "linear product",
            iterations: n_max,
            increment,
        });
    }
    let mut phi = identity_tuple::<C>(d, n_trunc);
    for j in 0..r {
        phi[j] = phi[j].mul(&products[j])?;
    }
    let germ_raw = conjugate_germ(f, &phi)?;
    // Pin the u-components to the exact monomials; the residual then
    // measures the product truncation honestly.
    let mut comps = germ_raw.components().to_vec();
    for k in 0..r {
        comps[k] = Series::monomial(
            MultiIndex::unit(d, blocks.b_map[k]),
            blocks.alpha[k].clone(),
            n_trunc,
        );
    }
    let germ = germ_raw.with_components(comps)?;
    Ok(LinearOutcome { phi, germ, iterations })
}
