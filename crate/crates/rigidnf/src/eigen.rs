//! Eigenvalues and Jordan form for the small matrices that appear in germ
//! analysis.
//!
//! Float mode computes roots of the characteristic polynomial numerically
//! (Durand–Kerner) and clusters them with `tol_eig`. Exact mode reconstructs
//! rational eigenvalues from the numeric approximations and verifies them
//! against the exact characteristic polynomial; a germ with irrational
//! eigenvalues is rejected rather than silently approximated. Numerical
//! Jordan forms are discontinuous, so genuinely defective clusters of
//! merely-close eigenvalues are refused instead of producing an
//! ill-conditioned transform.

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::{BigRational, Ratio};
use num::Zero;
use thiserror::Error;

use crate::linalg::CMat;
use crate::multiseries::Coeff;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("eigenvalue root finder failed to converge")]
    NoConvergence,
    #[error(
        "eigenvalue not expressible as an exact rational (approx {0}); \
         use float mode or supply prepared coordinates"
    )]
    IrrationalEigenvalue(String),
    #[error(
        "defective eigenvalue cluster with spread {spread:.3e} (tol_eig {tol:.3e}); \
         supply a similarity transform computed with exact data"
    )]
    DefectiveCluster { spread: f64, tol: f64 },
}

/// Coefficients `c_0..c_{n-1}` of the monic characteristic polynomial
/// `t^n + c_{n-1} t^{n-1} + ... + c_0`, by Faddeev–LeVerrier.
pub fn charpoly<C: Coeff>(m: &CMat<C>) -> Vec<C> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut coeffs = vec![C::zero(); n + 1];
    coeffs[n] = C::one();
    let mut acc = CMat::<C>::zero(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut mk = m.matmul(&acc);
        let ck = coeffs[n - k + 1].clone();
        for i in 0..n {
            mk[(i, i)] = mk[(i, i)].add(&ck);
        }
        let amk = m.matmul(&mk);
        let mut tr = C::zero();
        for i in 0..n {
            tr = tr.add(&amk[(i, i)]);
        }
        coeffs[n - k] = tr.neg().div_usize(k);
        acc = mk;
    }
    coeffs.truncate(n);
    coeffs
}

fn eval_monic(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Roots of a monic polynomial with the given low-order coefficients, by
/// Durand–Kerner iteration.
pub fn monic_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>, EigenError> {
    let n = coeffs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![-coeffs[0]]);
    }
    let scale = coeffs
        .iter()
        .map(|c| c.norm())
        .fold(1.0f64, f64::max)
        .powf(1.0 / n as f64)
        .max(1.0);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|i| seed.powu(i as u32 + 1) * scale).collect();
    for _ in 0..600 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // Perturb a collision and keep iterating.
                z[i] += Complex64::new(1e-8, 1e-8);
                max_step = f64::MAX;
                continue;
            }
            let step = eval_monic(coeffs, z[i]) / denom;
            z[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-15 * scale.max(1.0) {
            return Ok(z);
        }
    }
    // Accept if residuals are small even without step convergence.
    let ok = z
        .iter()
        .all(|&r| eval_monic(coeffs, r).norm() < 1e-9 * scale.max(1.0));
    if ok {
        Ok(z)
    } else {
        Err(EigenError::NoConvergence)
    }
}

/// Numeric eigenvalues (with repetitions) of a matrix after lossy conversion
/// to f64 precision.
pub fn eigenvalues_c64<C: Coeff>(m: &CMat<C>) -> Result<Vec<Complex64>, EigenError> {
    let n = m.rows;
    let mut mf = CMat::<Complex64>::zero(n, n);
    for i in 0..n {
        for j in 0..n {
            mf[(i, j)] = m[(i, j)].to_c64();
        }
    }
    let coeffs = charpoly(&mf);
    monic_roots(&coeffs)
}

pub fn spectral_radius<C: Coeff>(m: &CMat<C>) -> Result<f64, EigenError> {
    Ok(eigenvalues_c64(m)?
        .into_iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Distinct eigenvalues with algebraic multiplicities, plus the numeric
/// spread of each cluster (0 in exact mode).
pub struct EigenData<C: Coeff> {
    pub distinct: Vec<(C, usize)>,
    pub spreads: Vec<f64>,
}

/// Root-finder stall radius for repeated roots in double precision; the
/// per-root iterates straddle the true value at roughly this distance while
/// the cluster mean stays accurate. Polishing recovers the root itself.
const ROOT_STALL: f64 = 1e-4;

/// Cluster numeric roots of a monic polynomial and polish each cluster: a
/// size-m cluster is refined by Newton iteration on the (m-1)-th derivative,
/// where an m-fold root is simple. Returns (value, multiplicity, spread);
/// spread is reset to 0 when the polished value verifies as a genuine
/// m-fold root.
fn polished_clusters(
    coeffs: &[Complex64],
    roots: &[Complex64],
    tol: f64,
) -> Vec<(Complex64, usize, f64)> {
    let clusters = cluster(roots, tol.max(ROOT_STALL));
    let mut out = Vec::new();
    for cl in clusters {
        let m = cl.len();
        let mean = cl.iter().sum::<Complex64>() / m as f64;
        let spread = cl.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max);
        if m == 1 {
            out.push((mean, 1, spread));
            continue;
        }
        let dm1 = derivative_coeffs(coeffs, m - 1);
        let dm = derivative_coeffs(coeffs, m);
        let mut z = mean;
        for _ in 0..60 {
            let v = eval_poly(&dm1, z);
            let d = eval_poly(&dm, z);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            z -= step;
            if step.norm() < 1e-15 * z.norm().max(1.0) {
                break;
            }
        }
        let scale = z.norm().max(1.0).powi(coeffs.len() as i32);
        let verified = eval_monic(coeffs, z).norm() <= 1e-8 * scale;
        if verified {
            out.push((z, m, 0.0));
        } else {
            out.push((mean, m, spread));
        }
    }
    out
}

/// Coefficients (low to high, including the leading one) of the k-th
/// derivative of the monic polynomial with low-order coefficients `coeffs`.
fn derivative_coeffs(coeffs: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut full: Vec<Complex64> = coeffs.to_vec();
    full.push(Complex64::new(1.0, 0.0));
    for _ in 0..k {
        full = full
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * i as f64)
            .collect();
    }
    full
}

fn eval_poly(full: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in full.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

pub fn eigen_data<C: Coeff>(m: &CMat<C>, tol_eig: f64) -> Result<EigenData<C>, EigenError> {
    let n = m.rows;
    if n == 0 {
        return Ok(EigenData { distinct: Vec::new(), spreads: Vec::new() });
    }
    let mut mf = CMat::<Complex64>::zero(n, n);
    for i in 0..n {
        for j in 0..n {
            mf[(i, j)] = m[(i, j)].to_c64();
        }
    }
    let coeffs = charpoly(&mf);
    let numeric = monic_roots(&coeffs)?;
    let clusters = polished_clusters(&coeffs, &numeric, tol_eig);
    if C::EXACT {
        exact_eigen_data(m, &clusters)
    } else {
        let mut distinct = Vec::new();
        let mut spreads = Vec::new();
        for (z, mult, spread) in clusters {
            distinct.push((C::from_c64(z), mult));
            spreads.push(spread);
        }
        Ok(EigenData { distinct, spreads })
    }
}

fn cluster(values: &[Complex64], tol: f64) -> Vec<Vec<Complex64>> {
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
    for z in sorted {
        let scale = z.norm().max(1.0);
        match groups
            .iter_mut()
            .find(|g| g.iter().any(|w| (w - z).norm() <= tol * scale))
        {
            Some(g) => g.push(z),
            None => groups.push(vec![z]),
        }
    }
    groups
}

fn exact_eigen_data<C: Coeff>(
    m: &CMat<C>,
    clusters: &[(Complex64, usize, f64)],
) -> Result<EigenData<C>, EigenError> {
    let n = m.rows;
    let poly = charpoly(m);
    let mut distinct: Vec<(C, usize)> = Vec::new();
    let mut total = 0usize;
    for (mean, _, _) in clusters {
        // Try small-denominator candidates; a guess counts only if it is an
        // exact root of the exact characteristic polynomial.
        let mut found = None;
        'outer: for re in rational_candidates(mean.re) {
            for im in rational_candidates(mean.im) {
                let cand: C = C::from_big_ratio(&re)
                    .add(&C::from_big_ratio(&im).mul(&C::imaginary_unit()));
                let mult = exact_multiplicity(&poly, &cand);
                if mult > 0 {
                    found = Some((cand, mult));
                    break 'outer;
                }
            }
        }
        let (lam, mult) =
            found.ok_or_else(|| EigenError::IrrationalEigenvalue(format!("{mean}")))?;
        if distinct.iter().any(|(l, _)| *l == lam) {
            continue;
        }
        total += mult;
        distinct.push((lam, mult));
    }
    if total != n {
        return Err(EigenError::IrrationalEigenvalue(
            "characteristic polynomial has non-rational roots".into(),
        ));
    }
    let spreads = vec![0.0; distinct.len()];
    Ok(EigenData { distinct, spreads })
}

/// Multiplicity of `lam` as a root of the monic polynomial with low-order
/// coefficients `poly`, by repeated exact synthetic division.
fn exact_multiplicity<C: Coeff>(poly: &[C], lam: &C) -> usize {
    let mut coeffs: Vec<C> = poly.to_vec();
    coeffs.push(C::one());
    let mut mult = 0;
    loop {
        // Evaluate and divide in one Horner pass.
        let mut quotient = vec![C::zero(); coeffs.len().saturating_sub(1)];
        let mut acc = C::zero();
        for (i, c) in coeffs.iter().enumerate().rev() {
            acc = acc.mul(lam).add(c);
            if i > 0 {
                quotient[i - 1] = acc.clone();
            }
        }
        if !acc.is_zero(0.0) || coeffs.len() <= 1 {
            return mult;
        }
        mult += 1;
        coeffs = quotient;
    }
}

/// Small-denominator rational candidates near an f64 value, closest first:
/// continued-fraction convergents within `ROOT_STALL` of `x`. The caller
/// verifies candidates exactly, so false positives here are harmless.
fn rational_candidates(x: f64) -> Vec<BigRational> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    if x.abs() <= ROOT_STALL {
        out.push(BigRational::zero());
        if x == 0.0 {
            return out;
        }
    }
    const MAX_DEN: f64 = 1e6;
    let negative = x < 0.0;
    let mut v = x.abs();
    let (mut h0, mut h1) = (BigInt::from(1), BigInt::from(0));
    let (mut k0, mut k1) = (BigInt::from(0), BigInt::from(1));
    for _ in 0..40 {
        let a = v.floor();
        if a > MAX_DEN {
            break;
        }
        let ab = BigInt::from(a as i64);
        let h = &ab * &h0 + &h1;
        let k = &ab * &k0 + &k1;
        if let Some(kf) = num::ToPrimitive::to_f64(&k) {
            if kf > MAX_DEN {
                break;
            }
        }
        let q = Ratio::new(h.clone(), k.clone());
        if let Some(approx) = num::ToPrimitive::to_f64(&q) {
            if (approx - x.abs()).abs() <= ROOT_STALL * x.abs().max(1.0) {
                out.push(if negative { -q } else { q });
            }
        }
        h1 = h0;
        h0 = h;
        k1 = k0;
        k0 = k;
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    out
}

/// One Jordan block: `size` chained vectors for `eigenvalue`.
#[derive(Clone, Debug)]
pub struct JordanBlock<C: Coeff> {
    pub eigenvalue: C,
    pub size: usize,
}

/// Similarity `transform` whose columns are Jordan chains: the matrix in the
/// new basis is lower bidiagonal, `λ` on the diagonal and 1 on the
/// sub-diagonal inside each block.
pub struct JordanForm<C: Coeff> {
    pub transform: CMat<C>,
    pub blocks: Vec<JordanBlock<C>>,
}

pub fn jordan_form<C: Coeff>(
    m: &CMat<C>,
    eigs: &EigenData<C>,
    tol: f64,
) -> Result<JordanForm<C>, EigenError> {
    let n = m.rows;
    let mut columns: Vec<Vec<C>> = Vec::with_capacity(n);
    let mut blocks = Vec::new();
    for ((lam, mult), spread) in eigs.distinct.iter().zip(&eigs.spreads) {
        let mut b = m.clone();
        for i in 0..n {
            b[(i, i)] = b[(i, i)].sub(lam);
        }
        let chains = jordan_chains(&b, *mult, tol)?;
        let defective = chains.iter().any(|c| c.len() > 1);
        if defective && *spread > 1e-12 {
            return Err(EigenError::DefectiveCluster { spread: *spread, tol });
        }
        for chain in chains {
            blocks.push(JordanBlock { eigenvalue: lam.clone(), size: chain.len() });
            columns.extend(chain);
        }
    }
    assert_eq!(columns.len(), n, "Jordan chains must span");
    let mut transform = CMat::zero(n, n);
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            transform[(i, j)] = col[i].clone();
        }
    }
    Ok(JordanForm { transform, blocks })
}

/// Jordan chains for the nilpotent action of `b` on its generalized kernel
/// of dimension `mult`. Each chain is listed top first, eigenvector last.
fn jordan_chains<C: Coeff>(
    b: &CMat<C>,
    mult: usize,
    tol: f64,
) -> Result<Vec<Vec<Vec<C>>>, EigenError> {
    let n = b.rows;
    // Kernel filtration K_1 ⊆ K_2 ⊆ ... up to dimension `mult`.
    let mut kernels: Vec<Vec<Vec<C>>> = Vec::new();
    let mut power = CMat::<C>::identity(n);
    loop {
        power = power.matmul(b);
        let ker = power.nullspace(tol);
        let dim = ker.len();
        kernels.push(ker);
        if dim >= mult {
            break;
        }
        if kernels.len() > n {
            return Err(EigenError::NoConvergence);
        }
    }
    let depth = kernels.len();
    let mut chains: Vec<Vec<Vec<C>>> = Vec::new();
    // Height-j vectors inherited from longer chains.
    let mut inherited: Vec<Vec<C>> = Vec::new();
    for j in (1..=depth).rev() {
        let lower: &[Vec<C>] = if j >= 2 { &kernels[j - 2] } else { &[] };
        let span_dim = kernels[j - 1].len();
        let lower_dim = lower.len();
        let needed = span_dim - lower_dim - inherited.len();
        let mut fresh: Vec<Vec<C>> = Vec::new();
        if needed > 0 {
            // Pick candidates from K_j independent modulo K_{j-1} + inherited.
            for cand in &kernels[j - 1] {
                if fresh.len() == needed {
                    break;
                }
                let mut rows: Vec<Vec<C>> = Vec::new();
                rows.extend(lower.iter().cloned());
                rows.extend(inherited.iter().cloned());
                rows.extend(fresh.iter().cloned());
                rows.push(cand.clone());
                let k = rows.len();
                let mut mat = CMat::zero(n, k);
                for (c, v) in rows.iter().enumerate() {
                    for r in 0..n {
                        mat[(r, c)] = v[r].clone();
                    }
                }
                let mut probe = mat.clone();
                if probe.rref(tol).len() == k {
                    fresh.push(cand.clone());
                }
            }
            if fresh.len() != needed {
                return Err(EigenError::NoConvergence);
            }
        }
        for top in fresh {
            let mut chain = vec![top];
            for _ in 1..j {
                let next = b.matvec(chain.last().unwrap());
                chain.push(next);
            }
            chains.push(chain);
        }
        // Descend: next round sees the height-(j-1) elements of every chain
        // of length >= j.
        inherited = chains
            .iter()
            .filter(|c| c.len() >= j)
            .map(|c| c[c.len() - (j - 1).max(1)].clone())
            .collect();
        if j == 1 {
            break;
        }
    }
    let total: usize = chains.iter().map(|c| c.len()).sum();
    if total != mult {
        return Err(EigenError::NoConvergence);
    }
    Ok(chains)
}
