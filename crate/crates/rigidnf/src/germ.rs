//! Germ maps in prepared coordinates: rigidity certificates, internal
//! action, block structure, contraction and Jordan splitting.
//!
//! A germ enters with its critical hyperplanes among the first
//! `critical_count` coordinate hyperplanes. `rigidity_check` certifies the
//! monomial×unit structure and reads off the internal action,
//! `detect_blocks` splits periodic from non-periodic critical components,
//! and `jordan_split` brings the free linear block to Jordan form, fixing
//! the `(u, v, y, z)` coordinate layout every conjugation pass relies on.

use num::complex::Complex64;
use num::Zero;
use thiserror::Error;

use crate::config::Tolerances;
use crate::eigen::{self, EigenError};
use crate::linalg::CMat;
use crate::multiseries::{
    compose_tuple, linear_part, ExponentMatrix, Coeff, MultiIndex, Series, SeriesError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GermError {
    #[error("component {0} does not fix the origin")]
    OriginNotFixed(usize),
    #[error("component dimensions disagree")]
    MixedDimensions,
    #[error("critical_count {0} exceeds dimension {1}")]
    BadCriticalCount(usize, usize),
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigidityError {
    #[error("{}: {reason} — not rigid in these coordinates", match .component {
        Some(k) => format!("component {k}"),
        None => "series".to_string(),
    })]
    NotRigid { component: Option<usize>, reason: String },
    #[error("Jacobian determinant vanishes identically at this truncation")]
    DegenerateJacobian,
    #[error(
        "Jacobian monomial involves variable {var} outside the declared {q} critical variables"
    )]
    MonomialOutsideCritical { var: usize, q: usize },
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error(
        "internal action is non-injective (det D = 0): the non-periodic block cannot be \
         normalized; semi-conjugation repair is out of scope"
    )]
    NonInjectiveAction,
    #[error("periodic block is not a permutation matrix")]
    BadPeriodicBlock,
    #[error("eigenvalue computation failed: {0}")]
    Eigen(#[from] EigenError),
    #[error("germ error: {0}")]
    Germ(#[from] GermError),
    #[error("rigidity error: {0}")]
    Rigidity(#[from] RigidityError),
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContractionError {
    #[error("eigenvalue of modulus {modulus} within tol_eig of 1: contraction is indeterminate")]
    Indeterminate { modulus: f64 },
    #[error("eigenvalue computation failed: {0}")]
    Eigen(#[from] EigenError),
}

/// A holomorphic germ fixing the origin, truncated at total degree `trunc`.
#[derive(Clone, Debug)]
pub struct GermMap<C: Coeff> {
    dim: usize,
    trunc: u32,
    critical_count: usize,
    components: Vec<Series<C>>,
    pub tols: Tolerances,
}

impl<C: Coeff> GermMap<C> {
    pub fn new(
        components: Vec<Series<C>>,
        critical_count: usize,
        tols: Tolerances,
    ) -> Result<Self, GermError> {
        let dim = components.len();
        if critical_count > dim {
            return Err(GermError::BadCriticalCount(critical_count, dim));
        }
        let mut trunc = u32::MAX;
        for (i, c) in components.iter().enumerate() {
            if c.dim() != dim {
                return Err(GermError::MixedDimensions);
            }
            if !c.constant_term().is_zero(tols.coeff) {
                return Err(GermError::OriginNotFixed(i));
            }
            trunc = trunc.min(c.trunc());
        }
        let components = components
            .into_iter()
            .map(|c| c.truncate_to(trunc).pruned(tols.coeff))
            .collect();
        Ok(GermMap { dim, trunc, critical_count, components, tols })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn critical_count(&self) -> usize {
        self.critical_count
    }

    pub fn components(&self) -> &[Series<C>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Series<C> {
        &self.components[i]
    }

    /// Replace one component; used by the passes when transporting tails.
    pub fn with_component(&self, i: usize, s: Series<C>) -> Self {
        let mut g = self.clone();
        g.components[i] = s.truncate_to(g.trunc).pruned(g.tols.coeff);
        g
    }

    pub fn with_components(&self, comps: Vec<Series<C>>) -> Result<Self, GermError> {
        let mut g = GermMap::new(comps, self.critical_count, self.tols)?;
        g.trunc = g.trunc.min(self.trunc);
        Ok(g)
    }

    /// The differential at the origin as a dense matrix.
    pub fn df0(&self) -> CMat<C> {
        let lp = linear_part(&self.components);
        CMat::from_rows(&lp)
    }

    /// `f∘f∘…∘f`, `n` times.
    pub fn iterate(&self, n: usize) -> Result<Self, GermError> {
        let mut acc = self.components.clone();
        for _ in 1..n {
            acc = compose_tuple(&acc, &self.components)?;
        }
        GermMap::new(acc, self.critical_count, self.tols)
    }

    /// Conjugate by a coordinate permutation: coordinate `i` moves to
    /// position `perm[i]` (both variables and components).
    pub fn permute_coords(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.dim);
        let mut comps = vec![Series::zero(self.dim, self.trunc); self.dim];
        for (i, c) in self.components.iter().enumerate() {
            comps[perm[i]] = c.permute_vars(perm);
        }
        GermMap {
            dim: self.dim,
            trunc: self.trunc,
            critical_count: self.critical_count,
            components: comps,
            tols: self.tols,
        }
    }
}

/// Jacobian determinant, expanded to degree `trunc - 1`.
pub fn jacobian_det<C: Coeff>(f: &GermMap<C>) -> Result<Series<C>, SeriesError> {
    let d = f.dim();
    let rows: Vec<Vec<Series<C>>> = (0..d)
        .map(|i| (0..d).map(|j| f.component(i).partial_derivative(j)).collect())
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    series_det(&rows)
}

fn series_det<C: Coeff>(m: &[Vec<Series<C>>]) -> Result<Series<C>, SeriesError> {
    let n = m.len();
    if n == 0 {
        unreachable!("empty Jacobian");
    }
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    let mut acc: Option<Series<C>> = None;
    for j in 0..n {
        if m[0][j].is_empty() {
            continue;
        }
        let minor: Vec<Vec<Series<C>>> = (1..n)
            .map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c].clone()).collect())
            .collect();
        let sub = series_det(&minor)?;
        let term = m[0][j].mul(&sub)?;
        let term = if j % 2 == 0 { term } else { term.neg() };
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    Ok(acc.unwrap_or_else(|| Series::zero(m[0][0].dim(), m[0][0].trunc())))
}

/// Factor `s = x^m · u` with `u(0) ≠ 0`, `m` the entrywise minimum exponent
/// over the support. Fails when the quotient still vanishes at the origin —
/// the non-rigid signal.
pub fn monomial_unit_factor<C: Coeff>(
    s: &Series<C>,
    tol: f64,
) -> Result<(MultiIndex, Series<C>), RigidityError> {
    let pruned = s.clone().pruned(tol);
    if pruned.is_empty() {
        return Err(RigidityError::NotRigid {
            component: None,
            reason: "series vanishes identically".into(),
        });
    }
    let dim = pruned.dim();
    let mut min = vec![u32::MAX; dim];
    for (n, _) in pruned.terms() {
        for (i, &e) in n.0.iter().enumerate() {
            min[i] = min[i].min(e);
        }
    }
    let m = MultiIndex(min);
    let mut unit = Series::zero(dim, pruned.trunc());
    for (n, c) in pruned.terms() {
        unit.set_term(n.checked_sub(&m).expect("min divides support"), c.clone());
    }
    if unit.constant_term().is_zero(tol) {
        return Err(RigidityError::NotRigid {
            component: None,
            reason: format!("quotient by x^{m} has zero constant term"),
        });
    }
    Ok((m, unit))
}

/// The pullback matrix `A`: column `k` records the multiplicities with
/// which `f` pulls the `k`-th critical hyperplane back onto the others.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InternalAction {
    pub matrix: ExponentMatrix,
}

#[derive(Clone, Debug)]
pub struct RigidityCertificate<C: Coeff> {
    pub jacobian_monomial: MultiIndex,
    pub jacobian_unit_constant: C,
    pub pullback: InternalAction,
    /// Unit constants of the critical components (the α/β data).
    pub unit_constants: Vec<C>,
    pub verified_to_degree: u32,
}

/// Certify rigidity in the declared coordinates: the Jacobian determinant
/// and each critical component factor as monomial×unit with monomials
/// supported on the first `q` variables.
pub fn rigidity_check<C: Coeff>(f: &GermMap<C>) -> Result<RigidityCertificate<C>, RigidityError> {
    let q = f.critical_count();
    let tol = f.tols.coeff;
    let det = jacobian_det(f)?;
    if det.clone().pruned(tol).is_empty() {
        return Err(RigidityError::DegenerateJacobian);
    }
    let (jac_mono, jac_unit) = monomial_unit_factor(&det, tol).map_err(|e| match e {
        RigidityError::NotRigid { reason, .. } => {
            RigidityError::NotRigid { component: None, reason: format!("det df: {reason}") }
        }
        other => other,
    })?;
    if let Some(var) = (q..f.dim()).find(|&v| jac_mono.0[v] > 0) {
        return Err(RigidityError::MonomialOutsideCritical { var, q });
    }
    let mut pullback = ExponentMatrix::zero(q, q);
    let mut unit_constants = Vec::with_capacity(q);
    for k in 0..q {
        let (m, unit) = monomial_unit_factor(f.component(k), tol).map_err(|e| match e {
            RigidityError::NotRigid { reason, .. } => {
                RigidityError::NotRigid { component: Some(k), reason }
            }
            other => other,
        })?;
        if let Some(var) = (q..f.dim()).find(|&v| m.0[v] > 0) {
            return Err(RigidityError::MonomialOutsideCritical { var, q });
        }
        if m.is_zero() {
            return Err(RigidityError::NotRigid {
                component: Some(k),
                reason: "critical component is a unit (no monomial factor)".into(),
            });
        }
        for l in 0..q {
            pullback[(l, k)] = m.0[l] as i64;
        }
        unit_constants.push(unit.constant_term());
    }
    Ok(RigidityCertificate {
        jacobian_monomial: jac_mono,
        jacobian_unit_constant: jac_unit.constant_term(),
        pullback: InternalAction { matrix: pullback },
        unit_constants,
        verified_to_degree: f.trunc().saturating_sub(1),
    })
}

/// Block data of a prepared germ. Coordinate layout after `detect_blocks`
/// is `(u, y, t)`; after `jordan_split` it is `(u, v, y, z)` with
/// `x = (u, v)`, and `split_done` is set.
#[derive(Clone, Debug)]
pub struct BlockStructure<C: Coeff> {
    pub dim: usize,
    pub q: usize,
    pub r: usize,
    pub p: usize,
    pub e: usize,
    /// Permutation applied to the input coordinates by `detect_blocks`.
    pub prepare_perm: Vec<usize>,
    /// `u_k ∘ f = α_k · u_{b_map[k]} · unit`.
    pub b_map: Vec<usize>,
    pub a_matrix: ExponentMatrix,
    pub c_block: ExponentMatrix,
    pub d_block: ExponentMatrix,
    pub alpha: Vec<C>,
    pub beta: Vec<C>,
    /// Order of the periodic permutation `B`.
    pub eta: usize,
    /// Eigenvalue of `(u ↦ α u^B)^{∘η}` attached to each u-coordinate.
    pub xi: Vec<C>,
    pub spectral_radius: f64,
    pub eigenvalues: Vec<Complex64>,
    /// Filled by `jordan_split`.
    pub mu: Vec<C>,
    pub split_done: bool,
}

impl<C: Coeff> BlockStructure<C> {
    pub fn s(&self) -> usize {
        self.r + self.e
    }

    pub fn z_dim(&self) -> usize {
        self.dim - self.s() - self.p
    }

    /// Coordinate ranges in the split layout `(u, v, y, z)`.
    pub fn u_range(&self) -> std::ops::Range<usize> {
        0..self.r
    }
    pub fn v_range(&self) -> std::ops::Range<usize> {
        self.r..self.r + self.e
    }
    pub fn y_range(&self) -> std::ops::Range<usize> {
        let s = self.s();
        s..s + self.p
    }
    pub fn z_range(&self) -> std::ops::Range<usize> {
        self.s() + self.p..self.dim
    }

    /// γ = (α, μ): the diagonal scalars of the x-block monomial part.
    pub fn gamma(&self) -> Vec<C> {
        let mut g = self.alpha.clone();
        g.extend(self.mu.iter().cloned());
        g
    }

    /// Permutation map of `P = Diag(B, Id_e)` on the x-coordinates.
    pub fn p_map(&self) -> Vec<usize> {
        let mut m = self.b_map.clone();
        for k in self.r..self.s() {
            m.push(k);
        }
        m
    }

    /// E = [C; 0] as an s×p matrix.
    pub fn e_block(&self) -> ExponentMatrix {
        let s = self.s();
        let mut e = ExponentMatrix::zero(s, self.p);
        for l in 0..self.r {
            for k in 0..self.p {
                e[(l, k)] = self.c_block[(l, k)];
            }
        }
        e
    }

    /// Eigenvalue monomial of the η-iterate attached to an x-multi-index:
    /// `ξ^{n_u} · μ^{η n_v}`.
    pub fn eta_eigen_monomial(&self, n_u: &MultiIndex, n_v: &MultiIndex) -> C {
        let mut acc = C::one();
        for (j, &e) in n_u.0.iter().enumerate() {
            acc = acc.mul(&self.xi[j].pow_usize(e as usize));
        }
        for (k, &e) in n_v.0.iter().enumerate() {
            acc = acc.mul(&self.mu[k].pow_usize(self.eta * e as usize));
        }
        acc
    }
}

/// Contraction report: true iff every eigenvalue of df₀ has modulus < 1.
pub struct ContractionReport {
    pub contracting: bool,
    pub spectral_radius: f64,
    pub eigenvalues: Vec<Complex64>,
}

pub fn is_contracting<C: Coeff>(f: &GermMap<C>) -> Result<ContractionReport, ContractionError> {
    let eigs = eigen::eigenvalues_c64(&f.df0())?;
    let radius = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if (radius - 1.0).abs() <= f.tols.eig {
        return Err(ContractionError::Indeterminate { modulus: radius });
    }
    Ok(ContractionReport { contracting: radius < 1.0, spectral_radius: radius, eigenvalues: eigs })
}

/// Split critical components into periodic and non-periodic, permute them
/// into `(u, y, …)` order and extract `B`, `C`, `D`, `α`, `β`, `η`, `ξ`.
/// Rejects a vanishing `det D` (non-injective internal action).
pub fn detect_blocks<C: Coeff>(
    f: &GermMap<C>,
    cert: &RigidityCertificate<C>,
) -> Result<(GermMap<C>, BlockStructure<C>), BlockError> {
    let q = f.critical_count();
    let d = f.dim();
    let a = &cert.pullback.matrix;
    // k is periodic iff A^m e_k = e_k for some m ≤ q (exact integers).
    let mut periodic = vec![false; q];
    for k in 0..q {
        let mut col = MultiIndex::unit(q, k);
        for _ in 0..q {
            col = a.apply_index(&col);
            if col == MultiIndex::unit(q, k) {
                periodic[k] = true;
                break;
            }
        }
    }
    let u_coords: Vec<usize> = (0..q).filter(|&k| periodic[k]).collect();
    let y_coords: Vec<usize> = (0..q).filter(|&k| !periodic[k]).collect();
    let r = u_coords.len();
    let p = y_coords.len();
    // perm[old] = new position
    let mut perm = vec![0usize; d];
    for (new, &old) in u_coords.iter().chain(y_coords.iter()).enumerate() {
        perm[old] = new;
    }
    for old in q..d {
        perm[old] = old;
    }
    let g = f.permute_coords(&perm);
    // Re-read the action in the permuted order.
    let cert2 = rigidity_check(&g)?;
    let a2 = &cert2.pullback.matrix;
    let mut b = ExponentMatrix::zero(r, r);
    let mut c = ExponentMatrix::zero(r, p);
    let mut dm = ExponentMatrix::zero(p, p);
    for k in 0..r {
        for l in 0..r {
            b[(l, k)] = a2[(l, k)];
        }
        // Periodic columns must vanish on non-periodic rows.
        for l in r..q {
            if a2[(l, k)] != 0 {
                return Err(BlockError::BadPeriodicBlock);
            }
        }
    }
    for k in 0..p {
        for l in 0..r {
            c[(l, k)] = a2[(l, r + k)];
        }
        for l in 0..p {
            dm[(l, k)] = a2[(r + l, r + k)];
        }
    }
    let b_map = b.permutation_map().ok_or(BlockError::BadPeriodicBlock)?;
    if p > 0 && dm.det().is_zero() {
        return Err(BlockError::NonInjectiveAction);
    }
    let alpha = cert2.unit_constants[..r].to_vec();
    let beta = cert2.unit_constants[r..q].to_vec();
    // Cycle decomposition of B gives η and the η-iterate eigenvalues ξ.
    let (eta, xi) = cycle_data(&b_map, &alpha);
    let eigs = eigen::eigenvalues_c64(&g.df0())?;
    let radius = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let blocks = BlockStructure {
        dim: d,
        q,
        r,
        p,
        e: 0,
        prepare_perm: perm,
        b_map,
        a_matrix: a2.clone(),
        c_block: c,
        d_block: dm,
        alpha,
        beta,
        eta,
        xi,
        spectral_radius: radius,
        eigenvalues: eigs,
        mu: Vec::new(),
        split_done: false,
    };
    Ok((g, blocks))
}

fn cycle_data<C: Coeff>(b_map: &[usize], alpha: &[C]) -> (usize, Vec<C>) {
    let r = b_map.len();
    let mut eta = 1usize;
    let mut cycle_of = vec![usize::MAX; r];
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for start in 0..r {
        if cycle_of[start] != usize::MAX {
            continue;
        }
        let mut cyc = vec![start];
        cycle_of[start] = cycles.len();
        let mut j = b_map[start];
        while j != start {
            cycle_of[j] = cycles.len();
            cyc.push(j);
            j = b_map[j];
        }
        eta = lcm(eta, cyc.len());
        cycles.push(cyc);
    }
    let xi = (0..r)
        .map(|k| {
            let cyc = &cycles[cycle_of[k]];
            let mut prod = C::one();
            for &j in cyc {
                prod = prod.mul(&alpha[j]);
            }
            prod.pow_usize(eta / cyc.len())
        })
        .collect();
    (eta, xi)
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Bring the free block `∂k/∂t|₀` to (lower) Jordan form and split `t` into
/// `(v, z)`: `v` carries the nonzero eigenvalues `μ`, ordered
/// `1 > |μ¹| ≥ … ≥ |μᵉ| > 0` (ties by argument, then original block), `z`
/// the nilpotent rest. Returns the transformed germ, the completed block
/// structure, and the linear change of coordinates as a series tuple.
pub fn jordan_split<C: Coeff>(
    f: &GermMap<C>,
    blocks: &BlockStructure<C>,
) -> Result<(GermMap<C>, BlockStructure<C>, Vec<Series<C>>), BlockError> {
    let d = f.dim();
    let q = blocks.q;
    let dt = d - q;
    let trunc = f.trunc();
    let tols = f.tols;
    if dt == 0 {
        let mut b2 = blocks.clone();
        b2.split_done = true;
        b2.e = 0;
        b2.mu = Vec::new();
        return Ok((f.clone(), b2, crate::multiseries::identity_tuple(d, trunc)));
    }
    // t-block of df0.
    let df0 = f.df0();
    let mut tb = CMat::<C>::zero(dt, dt);
    for i in 0..dt {
        for j in 0..dt {
            tb[(i, j)] = df0[(q + i, q + j)].clone();
        }
    }
    let eig = eigen::eigen_data(&tb, tols.eig)?;
    let jf = eigen::jordan_form(&tb, &eig, if C::EXACT { 0.0 } else { tols.eig })?;
    // Order blocks: nonzero eigenvalues by (|μ| desc, arg asc, block index),
    // then zero blocks in original order.
    let mut order: Vec<usize> = (0..jf.blocks.len()).collect();
    let key = |bi: usize| {
        let lam = jf.blocks[bi].eigenvalue.to_c64();
        (lam.norm() > 1e-300, lam.norm(), lam.arg())
    };
    order.sort_by(|&a, &b| {
        let (za, na, aa) = key(a);
        let (zb, nb, ab) = key(b);
        zb.cmp(&za)
            .then(nb.total_cmp(&na))
            .then(aa.total_cmp(&ab))
            .then(a.cmp(&b))
    });
    // Column start of each block in the chain basis.
    let mut starts = vec![0usize; jf.blocks.len()];
    let mut acc = 0;
    for (i, b) in jf.blocks.iter().enumerate() {
        starts[i] = acc;
        acc += b.size;
    }
    let zero_tol = if C::EXACT { 0.0 } else { tols.eig };
    let mut col_order = Vec::with_capacity(dt);
    let mut mu = Vec::new();
    let mut e_count = 0usize;
    for &bi in &order {
        let blk = &jf.blocks[bi];
        let nonzero = !blk.eigenvalue.is_zero(zero_tol);
        for c in 0..blk.size {
            col_order.push(starts[bi] + c);
            if nonzero {
                mu.push(blk.eigenvalue.clone());
            }
        }
        if nonzero {
            e_count += blk.size;
        }
    }
    // S with reordered columns; t_new = S^{-1} t_old.
    let mut s_mat = CMat::<C>::zero(dt, dt);
    for (new_c, &old_c) in col_order.iter().enumerate() {
        for rrow in 0..dt {
            s_mat[(rrow, new_c)] = jf.transform[(rrow, old_c)].clone();
        }
    }
    let s_inv = invert_cmat(&s_mat, if C::EXACT { 0.0 } else { 1e-300 })
        .ok_or(BlockError::BadPeriodicBlock)?;
    // Linear stage on t, then the coordinate shuffle (u,y,v,z) -> (u,v,y,z).
    let r = blocks.r;
    let p = blocks.p;
    let e = e_count;
    let mut shuffle = vec![0usize; d];
    for i in 0..r {
        shuffle[i] = i;
    }
    for i in 0..p {
        shuffle[r + i] = r + e + i;
    }
    for i in 0..e {
        shuffle[q + i] = r + i;
    }
    for i in e..dt {
        shuffle[q + i] = r + e + p + (i - e);
    }
    // Φ = shuffle ∘ (Id_q × S^{-1}) as a positional series tuple: component
    // `shuffle[i]` (an output coordinate in the split order) written in the
    // input (u, y, t) variables.
    let mut phi_shuffled = vec![Series::zero(d, trunc); d];
    for i in 0..q {
        phi_shuffled[shuffle[i]] = Series::variable(i, d, trunc);
    }
    for i in 0..dt {
        let mut acc = Series::zero(d, trunc);
        for j in 0..dt {
            let coef = s_inv[(i, j)].clone();
            if coef.is_zero(0.0) {
                continue;
            }
            acc = acc.add(&Series::variable(q + j, d, trunc).scale(&coef))?;
        }
        phi_shuffled[shuffle[q + i]] = acc;
    }
    // Conjugate: f_new = Φ ∘ f ∘ Φ^{-1}.
    let phi_inv = crate::multiseries::invert_diffeo(&phi_shuffled, 1e-12)?;
    let inner = compose_tuple(f.components(), &phi_inv)?;
    let new_comps = compose_tuple(&phi_shuffled, &inner)?;
    let g = GermMap::new(new_comps, q, tols)?;
    let mut b2 = blocks.clone();
    b2.e = e;
    b2.mu = mu;
    b2.split_done = true;
    Ok((g, b2, phi_shuffled))
}

fn invert_cmat<C: Coeff>(m: &CMat<C>, tol: f64) -> Option<CMat<C>> {
    let n = m.rows;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![C::zero(); n];
        e[j] = C::one();
        cols.push(m.solve(&e, tol)?);
    }
    let mut out = CMat::zero(n, n);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            out[(i, j)] = col[i].clone();
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiseries::{identity_tuple, Cf64, GaussRational};

    type QS = Series<GaussRational>;

    fn q(n: i64, d: i64) -> GaussRational {
        GaussRational::from_ratio(n, d)
    }

    fn var(i: usize, dim: usize, n: u32) -> QS {
        Series::variable(i, dim, n)
    }

    /// f = (λX^a, XY+Z^m, XZ + XY ξ(Z) + ψ(Z)) with a=2, m=2, ψ(T)=T³,
    /// ξ(Z) = (3/2)Z.
    fn anycurve(trunc: u32) -> GermMap<GaussRational> {
        let (x, y, z) = (var(0, 3, trunc), var(1, 3, trunc), var(2, 3, trunc));
        let lam = q(1, 2);
        let f1 = x.mul(&x).unwrap().scale(&lam);
        let f2 = x.mul(&y).unwrap().add(&z.mul(&z).unwrap()).unwrap();
        let xi = z.scale(&q(3, 2));
        let f3 = x
            .mul(&z)
            .unwrap()
            .add(&x.mul(&y).unwrap().mul(&xi).unwrap())
            .unwrap()
            .add(&z.pow_usize(3).unwrap())
            .unwrap();
        GermMap::new(vec![f1, f2, f3], 1, Tolerances::default()).unwrap()
    }

    #[test]
    fn jacobian_of_anycurve() {
        // det df = 2λ X³ (1 + (3/2) Y) with λ = 1/2, i.e. X³ + (3/2) X³ Y.
        let f = anycurve(6);
        let det = jacobian_det(&f).unwrap();
        let mut expect = Series::zero(3, 5);
        expect.add_term(MultiIndex(vec![3, 0, 0]), q(1, 1));
        expect.add_term(MultiIndex(vec![3, 1, 0]), q(3, 2));
        assert_eq!(det, expect);
        let (m, unit) = monomial_unit_factor(&det, 0.0).unwrap();
        assert_eq!(m, MultiIndex(vec![3, 0, 0]));
        assert_eq!(unit.constant_term(), q(1, 1));
    }

    #[test]
    fn jacobian_diagonal_and_nonrigid() {
        // diag(λ1 x, λ2 y): det = λ1 λ2.
        let f = GermMap::new(
            vec![var(0, 2, 5).scale(&q(1, 2)), var(1, 2, 5).scale(&q(1, 3))],
            0,
            Tolerances::default(),
        )
        .unwrap();
        let det = jacobian_det(&f).unwrap();
        assert_eq!(det, Series::constant(q(1, 6), 2, 4));
        // f = (XY(1+X), XY(1+Y)): det df = XY(X + Y + 3XY), not rigid.
        let (x, y) = (var(0, 2, 6), var(1, 2, 6));
        let xy = x.mul(&y).unwrap();
        let f = GermMap::new(
            vec![
                xy.mul(&Series::one(2, 6).add(&x).unwrap()).unwrap(),
                xy.mul(&Series::one(2, 6).add(&y).unwrap()).unwrap(),
            ],
            2,
            Tolerances::default(),
        )
        .unwrap();
        let det = jacobian_det(&f).unwrap();
        let inner = x
            .add(&y)
            .unwrap()
            .add(&xy.scale(&q(3, 1)).truncate_to(6))
            .unwrap();
        assert_eq!(det, xy.mul(&inner).unwrap().truncate_to(5));
        assert!(matches!(
            rigidity_check(&f),
            Err(RigidityError::NotRigid { .. })
        ));
    }

    #[test]
    fn monomial_unit_factor_examples() {
        // x²y + x²y² = x²y (1 + y)
        let (x, y) = (var(0, 2, 6), var(1, 2, 6));
        let s = x
            .pow_usize(2)
            .unwrap()
            .mul(&y)
            .unwrap()
            .add(&x.pow_usize(2).unwrap().mul(&y.pow_usize(2).unwrap()).unwrap())
            .unwrap();
        let (m, u) = monomial_unit_factor(&s, 0.0).unwrap();
        assert_eq!(m, MultiIndex(vec![2, 1]));
        assert_eq!(u, Series::one(2, 6).add(&y).unwrap().truncate_to(6));
        // 1 + x factors trivially
        let s = Series::one(2, 6).add(&x).unwrap();
        let (m, u) = monomial_unit_factor(&s, 0.0).unwrap();
        assert!(m.is_zero());
        assert_eq!(u, s);
        // xy(x + y + 3xy) fails: quotient has zero constant term
        let s = x
            .mul(&y)
            .unwrap()
            .mul(&x.add(&y).unwrap().add(&x.mul(&y).unwrap().scale(&q(3, 1))).unwrap())
            .unwrap();
        assert!(monomial_unit_factor(&s, 0.0).is_err());
    }

    #[test]
    fn rigidity_of_manyimages() {
        // f = (λX, X(1+Y²), XYZ²) with a=1: A = [[1,1,1],[0,0,1],[0,0,2]].
        let (x, y, z) = (var(0, 3, 6), var(1, 3, 6), var(2, 3, 6));
        let f = GermMap::new(
            vec![
                x.scale(&q(1, 2)),
                x.mul(&Series::one(3, 6).add(&y.mul(&y).unwrap()).unwrap()).unwrap(),
                x.mul(&y).unwrap().mul(&z.mul(&z).unwrap()).unwrap(),
            ],
            3,
            Tolerances::default(),
        )
        .unwrap();
        let cert = rigidity_check(&f).unwrap();
        let expect =
            ExponentMatrix::from_rows(&[vec![1, 1, 1], vec![0, 0, 1], vec![0, 0, 2]]);
        assert_eq!(cert.pullback.matrix, expect);
        // X is periodic; D = [[0,1],[0,2]] has det 0 → rejection.
        let err = detect_blocks(&f, &cert).unwrap_err();
        assert!(matches!(err, BlockError::NonInjectiveAction));
    }

    #[test]
    fn detect_blocks_spec_example() {
        // A = [[1,1,2],[0,2,1],[0,1,0]] → r=1, B=[1], C=[1,2], D=[[2,1],[1,0]], η=1.
        // Germ: (0.4 X · (monomials of Y,Z per columns)) realized directly.
        let (x, y, z) = (var(0, 3, 6), var(1, 3, 6), var(2, 3, 6));
        let f1 = x.scale(&q(2, 5));
        let f2 = x
            .mul(&y.pow_usize(2).unwrap())
            .unwrap()
            .mul(&z)
            .unwrap()
            .scale(&q(1, 3));
        let f3 = x.pow_usize(2).unwrap().mul(&y).unwrap().scale(&q(1, 4));
        let f = GermMap::new(vec![f1, f2, f3], 3, Tolerances::default()).unwrap();
        let cert = rigidity_check(&f).unwrap();
        let (_, blocks) = detect_blocks(&f, &cert).unwrap();
        assert_eq!((blocks.r, blocks.p, blocks.eta), (1, 2, 1));
        assert_eq!(blocks.b_map, vec![0]);
        assert_eq!(blocks.c_block, ExponentMatrix::from_rows(&[vec![1, 2]]));
        assert_eq!(
            blocks.d_block,
            ExponentMatrix::from_rows(&[vec![2, 1], vec![1, 0]])
        );
        assert_eq!(blocks.xi, vec![q(2, 5)]);
    }

    #[test]
    fn purely_monomial_permutation_is_all_periodic() {
        // x ↦ (α1 y, α2 x): swap permutation, r = q = 2.
        let (x, y) = (var(0, 2, 5), var(1, 2, 5));
        let f = GermMap::new(
            vec![y.scale(&q(1, 2)), x.scale(&q(1, 3))],
            2,
            Tolerances::default(),
        )
        .unwrap();
        let cert = rigidity_check(&f).unwrap();
        let (_, blocks) = detect_blocks(&f, &cert).unwrap();
        assert_eq!((blocks.r, blocks.p, blocks.eta), (2, 0, 2));
        // ξ = cycle product for both coordinates.
        assert_eq!(blocks.xi, vec![q(1, 6), q(1, 6)]);
    }

    #[test]
    fn contraction_examples() {
        let f = GermMap::new(
            vec![
                var(0, 3, 4).scale(&q(1, 2)),
                var(1, 3, 4).scale(&q(1, 4)),
                Series::zero(3, 4),
            ],
            0,
            Tolerances::default(),
        )
        .unwrap();
        let rep = is_contracting(&f).unwrap();
        assert!(rep.contracting);
        assert!((rep.spectral_radius - 0.5).abs() < 1e-10);
        let g = GermMap::new(
            vec![var(0, 2, 4), var(1, 2, 4).scale(&q(1, 2))],
            0,
            Tolerances::default(),
        )
        .unwrap();
        assert!(matches!(
            is_contracting(&g),
            Err(ContractionError::Indeterminate { .. })
        ));
        // anycurve with a=1, λ=1/2: radius 1/2.
        let (x, y, z) = (var(0, 3, 6), var(1, 3, 6), var(2, 3, 6));
        let f1 = x.scale(&q(1, 2));
        let f2 = x.mul(&y).unwrap().add(&z.mul(&z).unwrap()).unwrap();
        let f3 = x
            .mul(&z)
            .unwrap()
            .add(&x.mul(&y).unwrap().mul(&z.scale(&q(3, 2))).unwrap())
            .unwrap()
            .add(&z.pow_usize(3).unwrap())
            .unwrap();
        let f = GermMap::new(vec![f1, f2, f3], 1, Tolerances::default()).unwrap();
        let rep = is_contracting(&f).unwrap();
        assert!(rep.contracting);
        assert!((rep.spectral_radius - 0.5).abs() < 1e-10);
    }

    #[test]
    fn jordan_split_examples() {
        use num::complex::Complex64;
        type FS = Series<Cf64>;
        let cx = |re: f64| Complex64::new(re, 0.0);
        // q=0 germ with t-block diag(0.5, 0): e=1 after split.
        let f = GermMap::<Cf64>::new(
            vec![
                FS::variable(0, 2, 5).scale(&cx(0.5)),
                FS::variable(0, 2, 5)
                    .mul(&FS::variable(0, 2, 5))
                    .unwrap(),
            ],
            0,
            Tolerances::default(),
        )
        .unwrap();
        let blocks = BlockStructure {
            dim: 2,
            q: 0,
            r: 0,
            p: 0,
            e: 0,
            prepare_perm: vec![0, 1],
            b_map: vec![],
            a_matrix: ExponentMatrix::zero(0, 0),
            c_block: ExponentMatrix::zero(0, 0),
            d_block: ExponentMatrix::zero(0, 0),
            alpha: vec![],
            beta: vec![],
            eta: 1,
            xi: vec![],
            spectral_radius: 0.5,
            eigenvalues: vec![],
            mu: vec![],
            split_done: false,
        };
        let (g, b2, _phi) = jordan_split(&f, &blocks).unwrap();
        assert_eq!(b2.e, 1);
        assert!((b2.mu[0].to_c64().re - 0.5).abs() < 1e-12);
        assert_eq!(b2.z_dim(), 1);
        // v-component is exactly 0.5 v at linear order.
        let lin = g.df0();
        assert!((lin[(0, 0)].to_c64().re - 0.5).abs() < 1e-12);
        // Nilpotent t-block [[0,0],[1,0]]: e = 0, everything goes to z.
        let f = GermMap::<Cf64>::new(
            vec![FS::zero(2, 5), FS::variable(0, 2, 5)],
            0,
            Tolerances::default(),
        )
        .unwrap();
        let (_, b3, phi) = jordan_split(&f, &blocks).unwrap();
        assert_eq!(b3.e, 0);
        assert_eq!(b3.z_dim(), 2);
        // The identity case keeps Φ linear.
        assert_eq!(phi.len(), 2);
        let _ = identity_tuple::<Cf64>(2, 5);
    }
}
