//! Sparse multivariate formal power series truncated at a total degree.
//!
//! Terms of degree above the truncation are discarded by every operation;
//! binary operations truncate to the smaller of the two bounds. Storage is a
//! `BTreeMap` keyed by [`MultiIndex`] in graded-lex order, so iteration and
//! printing are deterministic.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::Zero;
use thiserror::Error;

use super::coeff::Coeff;
use super::index::MultiIndex;
use super::matrix::{ExponentMatrix, RationalMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("arity mismatch: outer dimension {0}, {1} inner series")]
    ArityMismatch(usize, usize),
    #[error("inner series must fix the origin (zero constant term)")]
    NonzeroConstantTerm,
    #[error("expected constant term {expected}, found a different one")]
    WrongConstantTerm { expected: String },
    #[error("negative entry in exponent matrix")]
    NegativeExponent,
    #[error("linear part is singular (within tolerance)")]
    SingularLinearPart,
    #[error("variable index {0} out of range for dimension {1}")]
    BadVariableIndex(usize, usize),
    #[error("division by a non-unit (zero constant term)")]
    NotAUnit,
}

pub type SeriesResult<T> = Result<T, SeriesError>;

/// A formal power series in `dim` variables, truncated beyond total degree
/// `trunc`.
#[derive(Clone, PartialEq, Debug)]
pub struct Series<C: Coeff> {
    dim: usize,
    trunc: u32,
    terms: BTreeMap<MultiIndex, C>,
}

impl<C: Coeff> Series<C> {
    pub fn zero(dim: usize, trunc: u32) -> Self {
        Series { dim, trunc, terms: BTreeMap::new() }
    }

    pub fn constant(c: C, dim: usize, trunc: u32) -> Self {
        let mut s = Self::zero(dim, trunc);
        s.add_term(MultiIndex::zero(dim), c);
        s
    }

    pub fn one(dim: usize, trunc: u32) -> Self {
        Self::constant(C::one(), dim, trunc)
    }

    pub fn variable(i: usize, dim: usize, trunc: u32) -> Self {
        assert!(i < dim);
        let mut s = Self::zero(dim, trunc);
        s.add_term(MultiIndex::unit(dim, i), C::one());
        s
    }

    pub fn monomial(n: MultiIndex, c: C, trunc: u32) -> Self {
        let mut s = Self::zero(n.dim(), trunc);
        s.add_term(n, c);
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, n: &MultiIndex) -> C {
        self.terms.get(n).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&MultiIndex::zero(self.dim))
    }

    /// Insert-or-accumulate one term, dropping exact zeros and anything above
    /// the truncation degree.
    pub fn add_term(&mut self, n: MultiIndex, c: C) {
        if n.degree() > self.trunc {
            return;
        }
        let entry = self.terms.entry(n);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if !c.is_zero(0.0) {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero(0.0) {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn set_term(&mut self, n: MultiIndex, c: C) {
        if n.degree() > self.trunc {
            return;
        }
        if c.is_zero(0.0) {
            self.terms.remove(&n);
        } else {
            self.terms.insert(n, c);
        }
    }

    /// Remove coefficients of modulus at most `tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| !c.is_zero(tol));
    }

    pub fn pruned(mut self, tol: f64) -> Self {
        self.prune(tol);
        self
    }

    pub fn truncate_to(&self, trunc: u32) -> Self {
        let mut s = Self::zero(self.dim, trunc);
        for (n, c) in &self.terms {
            if n.degree() <= trunc {
                s.terms.insert(n.clone(), c.clone());
            }
        }
        s
    }

    /// Relabel the truncation bound. Raising it asserts that the now-covered
    /// degrees are complete as stored — the caller carries that proof (e.g.
    /// a factor of positive order protects a product from the missing
    /// degrees of a differentiated operand).
    pub fn with_trunc(mut self, trunc: u32) -> Self {
        self.terms.retain(|n, _| n.degree() <= trunc);
        self.trunc = trunc;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Smallest total degree with a nonzero term, or `None` for the zero
    /// series.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|n| n.degree()).min()
    }

    pub fn is_zero_tol(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.is_zero(tol))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.sub(other).map_or(false, |d| d.is_zero_tol(tol))
    }

    /// The homogeneous part of total degree `m`.
    pub fn degree_slice(&self, m: u32) -> Vec<(MultiIndex, C)> {
        self.terms
            .iter()
            .filter(|(n, _)| n.degree() == m)
            .map(|(n, c)| (n.clone(), c.clone()))
            .collect()
    }

    fn check_dim(&self, other: &Self) -> SeriesResult<()> {
        if self.dim != other.dim {
            return Err(SeriesError::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> SeriesResult<Self> {
        self.check_dim(other)?;
        let mut out = self.truncate_to(self.trunc.min(other.trunc));
        for (n, c) in &other.terms {
            out.add_term(n.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> SeriesResult<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        for (n, c) in &self.terms {
            out.terms.insert(n.clone(), c.neg());
        }
        out
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero(0.0) {
            return Self::zero(self.dim, self.trunc);
        }
        let mut out = Self::zero(self.dim, self.trunc);
        for (n, a) in &self.terms {
            out.add_term(n.clone(), a.mul(c));
        }
        out
    }

    /// Cauchy product truncated at the smaller of the two bounds.
    pub fn mul(&self, other: &Self) -> SeriesResult<Self> {
        self.check_dim(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut acc: BTreeMap<MultiIndex, C> = BTreeMap::new();
        for (na, ca) in &self.terms {
            let da = na.degree();
            if da > trunc {
                continue;
            }
            for (nb, cb) in &other.terms {
                if da + nb.degree() > trunc {
                    continue;
                }
                let n = na.add(nb);
                let p = ca.mul(cb);
                match acc.entry(n) {
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(p);
                    }
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        let s = o.get().add(&p);
                        *o.get_mut() = s;
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero(0.0));
        Ok(Series { dim: self.dim, trunc, terms: acc })
    }

    pub fn pow_usize(&self, e: usize) -> SeriesResult<Self> {
        let mut acc = Self::one(self.dim, self.trunc);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Evaluate on an origin-preserving tuple of inner series.
    pub fn compose(&self, inner: &[Series<C>]) -> SeriesResult<Series<C>> {
        if inner.len() != self.dim {
            return Err(SeriesError::ArityMismatch(self.dim, inner.len()));
        }
        let out_dim = if inner.is_empty() { 0 } else { inner[0].dim };
        let mut trunc = self.trunc;
        for g in inner {
            if g.dim != out_dim {
                return Err(SeriesError::DimensionMismatch(g.dim, out_dim));
            }
            if !g.constant_term().is_zero(0.0) {
                return Err(SeriesError::NonzeroConstantTerm);
            }
            trunc = trunc.min(g.trunc);
        }
        // Cached powers of each inner component, built on demand.
        let mut pows: Vec<Vec<Series<C>>> =
            inner.iter().map(|_| vec![Series::one(out_dim, trunc)]).collect();
        let mut out = Series::zero(out_dim, trunc);
        for (n, c) in &self.terms {
            if n.degree() > trunc {
                continue;
            }
            let mut prod = Series::constant(c.clone(), out_dim, trunc);
            for (l, &e) in n.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while pows[l].len() <= e as usize {
                    let next = pows[l].last().unwrap().mul(&inner[l])?;
                    pows[l].push(next);
                }
                prod = prod.mul(&pows[l][e as usize])?;
            }
            for (m, a) in prod.terms {
                out.add_term(m, a);
            }
        }
        Ok(out)
    }

    /// Substitute zero for variable `var`.
    pub fn subst_zero(&self, var: usize) -> SeriesResult<Series<C>> {
        if var >= self.dim {
            return Err(SeriesError::BadVariableIndex(var, self.dim));
        }
        let mut out = Self::zero(self.dim, self.trunc);
        for (n, c) in &self.terms {
            if n.0[var] == 0 {
                out.terms.insert(n.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Formal partial derivative; truncation drops by one.
    pub fn partial_derivative(&self, var: usize) -> SeriesResult<Series<C>> {
        if var >= self.dim {
            return Err(SeriesError::BadVariableIndex(var, self.dim));
        }
        let trunc = self.trunc.saturating_sub(1);
        let mut out = Self::zero(self.dim, trunc);
        for (n, c) in &self.terms {
            let e = n.0[var];
            if e == 0 {
                continue;
            }
            let mut m = n.clone();
            m.0[var] = e - 1;
            let mut k = c.clone();
            for _ in 1..e {
                k = k.add(c);
            }
            out.add_term(m, k);
        }
        Ok(out)
    }

    /// Scale variable `var` by τ and integrate τ over [0,1]: each term with
    /// exponent `e` in that variable is divided by `e+1`.
    pub fn tau_integral(&self, var: usize) -> SeriesResult<Series<C>> {
        if var >= self.dim {
            return Err(SeriesError::BadVariableIndex(var, self.dim));
        }
        let mut out = Self::zero(self.dim, self.trunc);
        for (n, c) in &self.terms {
            let e = n.0[var] as usize;
            out.terms.insert(n.clone(), c.div_usize(e + 1));
        }
        Ok(out)
    }

    /// Rename variables: exponent of variable `i` moves to `perm[i]`, so the
    /// result represents the same function after the coordinate permutation.
    pub fn permute_vars(&self, perm: &[usize]) -> Series<C> {
        assert_eq!(perm.len(), self.dim);
        let mut out = Self::zero(self.dim, self.trunc);
        for (n, c) in &self.terms {
            out.terms.insert(n.permute(perm), c.clone());
        }
        out
    }

    /// Inverse of a unit: requires a nonzero constant term.
    pub fn unit_inverse(&self) -> SeriesResult<Series<C>> {
        let c0 = self.constant_term();
        let c0_inv = c0.inv().ok_or(SeriesError::NotAUnit)?;
        // 1/(c(1+w)) = c^{-1} Σ (-w)^k
        let mut w = self.scale(&c0_inv);
        w.set_term(MultiIndex::zero(self.dim), C::zero());
        let neg_w = w.neg();
        let mut acc = Series::one(self.dim, self.trunc);
        let mut term = Series::one(self.dim, self.trunc);
        for _ in 0..self.trunc {
            term = term.mul(&neg_w)?;
            if term.is_empty() {
                break;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc.scale(&c0_inv))
    }

    /// log(1 + w) for a series with constant term 1.
    pub fn unit_log(&self) -> SeriesResult<Series<C>> {
        if !self.constant_term().sub(&C::one()).is_zero(0.0) {
            return Err(SeriesError::WrongConstantTerm { expected: "1".into() });
        }
        let mut w = self.clone();
        w.set_term(MultiIndex::zero(self.dim), C::zero());
        let mut acc = Series::zero(self.dim, self.trunc);
        let mut pow = Series::one(self.dim, self.trunc);
        for k in 1..=self.trunc as usize {
            pow = pow.mul(&w)?;
            if pow.is_empty() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            let mut contrib = Series::zero(self.dim, self.trunc);
            for (n, c) in &pow.terms {
                let c = c.div_usize(k);
                contrib.terms.insert(n.clone(), if sign > 0 { c } else { c.neg() });
            }
            acc = acc.add(&contrib)?;
        }
        Ok(acc)
    }

    /// exp(s) for a series with zero constant term.
    pub fn unit_exp(&self) -> SeriesResult<Series<C>> {
        if !self.constant_term().is_zero(0.0) {
            return Err(SeriesError::WrongConstantTerm { expected: "0".into() });
        }
        let mut acc = Series::one(self.dim, self.trunc);
        let mut term = Series::one(self.dim, self.trunc);
        for k in 1..=self.trunc as usize {
            term = term.mul(self)?;
            term = {
                let mut t = Series::zero(self.dim, self.trunc);
                for (n, c) in &term.terms {
                    t.terms.insert(n.clone(), c.div_usize(k));
                }
                t
            };
            if term.is_empty() {
                break;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }
}

/// `vars^M`: component `k` is `∏_l vars_l^{M[l][k]}`. Entries must be
/// nonnegative.
pub fn monomial_pow<C: Coeff>(
    vars: &[Series<C>],
    m: &ExponentMatrix,
) -> SeriesResult<Vec<Series<C>>> {
    if !m.is_nonnegative() {
        return Err(SeriesError::NegativeExponent);
    }
    assert_eq!(vars.len(), m.rows, "row count must match variable count");
    let (dim, trunc) = match vars.first() {
        Some(v) => (v.dim(), v.trunc()),
        None => (0, 0),
    };
    let mut out = Vec::with_capacity(m.cols);
    for k in 0..m.cols {
        let mut acc = Series::one(dim, trunc);
        for (l, v) in vars.iter().enumerate() {
            let e = m[(l, k)] as usize;
            if e > 0 {
                acc = acc.mul(&v.pow_usize(e)?)?;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// `units^Q` for rational `Q`, computed as `exp((log units) · Q)`. Each unit
/// must have constant term 1.
pub fn unit_pow_matrix<C: Coeff>(
    units: &[Series<C>],
    q: &RationalMatrix,
) -> SeriesResult<Vec<Series<C>>> {
    assert_eq!(units.len(), q.rows, "row count must match unit count");
    let logs: Vec<Series<C>> = units
        .iter()
        .map(|u| u.unit_log())
        .collect::<SeriesResult<_>>()?;
    let (dim, trunc) = match units.first() {
        Some(u) => (u.dim(), u.trunc()),
        None => (0, 0),
    };
    let mut out = Vec::with_capacity(q.cols);
    for k in 0..q.cols {
        let mut acc = Series::zero(dim, trunc);
        for (l, lg) in logs.iter().enumerate() {
            let entry = &q[(l, k)];
            if entry.is_zero() {
                continue;
            }
            acc = acc.add(&lg.scale(&ratio_to_coeff::<C>(entry)))?;
        }
        out.push(acc.unit_exp()?);
    }
    Ok(out)
}

fn ratio_to_coeff<C: Coeff>(q: &BigRational) -> C {
    C::from_big_ratio(q)
}

/// The d×d matrix of linear-part coefficients of an origin-fixing tuple:
/// entry `(i, j)` is the coefficient of variable `j` in component `i`.
pub fn linear_part<C: Coeff>(f: &[Series<C>]) -> Vec<Vec<C>> {
    let d = f.len();
    f.iter()
        .map(|fi| {
            (0..d)
                .map(|j| fi.coeff(&MultiIndex::unit(fi.dim(), j)))
                .collect()
        })
        .collect()
}

/// Compose each component of `outer` with the tuple `inner`.
pub fn compose_tuple<C: Coeff>(
    outer: &[Series<C>],
    inner: &[Series<C>],
) -> SeriesResult<Vec<Series<C>>> {
    outer.iter().map(|s| s.compose(inner)).collect()
}

/// Identity tuple in `dim` variables.
pub fn identity_tuple<C: Coeff>(dim: usize, trunc: u32) -> Vec<Series<C>> {
    (0..dim).map(|i| Series::variable(i, dim, trunc)).collect()
}

/// Compositional inverse of an origin-fixing tuple with invertible linear
/// part: `compose(f, inverse) = identity` mod the truncation degree.
pub fn invert_diffeo<C: Coeff>(f: &[Series<C>], tol: f64) -> SeriesResult<Vec<Series<C>>> {
    let d = f.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let trunc = f.iter().map(|s| s.trunc()).min().unwrap();
    for fi in f {
        if fi.dim() != d {
            return Err(SeriesError::DimensionMismatch(fi.dim(), d));
        }
        if !fi.constant_term().is_zero(0.0) {
            return Err(SeriesError::NonzeroConstantTerm);
        }
    }
    let l = linear_part(f);
    let l_inv = invert_matrix(&l, tol).ok_or(SeriesError::SingularLinearPart)?;
    let apply_linv = |v: &[Series<C>]| -> SeriesResult<Vec<Series<C>>> {
        (0..d)
            .map(|i| {
                let mut acc = Series::zero(d, trunc);
                for (j, vj) in v.iter().enumerate() {
                    acc = acc.add(&vj.scale(&l_inv[i][j]))?;
                }
                Ok(acc)
            })
            .collect()
    };
    // h := f - L, g_{m+1} = L^{-1}(id - h∘g_m); degree m is settled after m
    // iterations.
    let id = identity_tuple::<C>(d, trunc);
    let h: Vec<Series<C>> = (0..d)
        .map(|i| {
            let mut s = f[i].truncate_to(trunc);
            for j in 0..d {
                let lin = MultiIndex::unit(d, j);
                let c = s.coeff(&lin);
                if !c.is_zero(0.0) {
                    s.add_term(lin, c.neg());
                }
            }
            s
        })
        .collect();
    let mut g = apply_linv(&id)?;
    for _ in 0..trunc {
        let hg = compose_tuple(&h, &g)?;
        let rhs: Vec<Series<C>> = (0..d)
            .map(|i| id[i].sub(&hg[i]))
            .collect::<SeriesResult<_>>()?;
        g = apply_linv(&rhs)?;
    }
    Ok(g)
}

fn invert_matrix<C: Coeff>(m: &[Vec<C>], tol: f64) -> Option<Vec<Vec<C>>> {
    let n = m.len();
    let mut a: Vec<Vec<C>> = m.to_vec();
    let mut inv: Vec<Vec<C>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { C::one() } else { C::zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero(tol))
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p_inv = a[col][col].inv()?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&p_inv);
            inv[col][j] = inv[col][j].mul(&p_inv);
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero(0.0) {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].sub(&f.mul(&a[col][j]));
                inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j]));
            }
        }
    }
    Some(inv)
}
