//! Small dense linear algebra over a generic complex scalar.
//!
//! Everything here works for both coefficient modes: rank decisions take a
//! tolerance that exact mode ignores (a pivot is any exactly nonzero entry).
//! Sizes are tiny throughout (orbit systems, degree slices), so plain
//! Gaussian elimination is enough.

use crate::multiseries::Coeff;

/// Dense row-major matrix.
#[derive(Clone, Debug)]
pub struct CMat<C: Coeff> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<C>,
}

impl<C: Coeff> CMat<C> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    pub fn get(&self, r: usize, c: usize) -> &C {
        &self.data[r * self.cols + c]
    }

    pub fn matmul(&self, rhs: &CMat<C>) -> CMat<C> {
        assert_eq!(self.cols, rhs.rows);
        let mut out = CMat::<C>::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)].clone();
                if a.is_zero(0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)].add(&a.mul(&rhs[(k, j)]));
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C]) -> Vec<C> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = C::zero();
                for j in 0..self.cols {
                    acc = acc.add(&self[(i, j)].mul(&v[j]));
                }
                acc
            })
            .collect()
    }

    pub fn conj_transpose(&self) -> CMat<C> {
        let mut out = CMat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn pow(&self, e: usize) -> CMat<C> {
        assert_eq!(self.rows, self.cols);
        let mut acc = CMat::identity(self.rows);
        for _ in 0..e {
            acc = acc.matmul(self);
        }
        acc
    }

    pub fn det(&self) -> C {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = C::one();
        for col in 0..n {
            let pivot = match (col..n)
                .filter(|&r| !a[(r, col)].is_zero(0.0))
                .max_by(|&r1, &r2| a[(r1, col)].abs().total_cmp(&a[(r2, col)].abs()))
            {
                Some(p) => p,
                None => return C::zero(),
            };
            if pivot != col {
                for j in 0..n {
                    let t = a[(col, j)].clone();
                    a[(col, j)] = a[(pivot, j)].clone();
                    a[(pivot, j)] = t;
                }
                det = det.neg();
            }
            let p = a[(col, col)].clone();
            det = det.mul(&p);
            let p_inv = p.inv().expect("nonzero pivot");
            for r in col + 1..n {
                if a[(r, col)].is_zero(0.0) {
                    continue;
                }
                let f = a[(r, col)].mul(&p_inv);
                for j in col..n {
                    a[(r, j)] = a[(r, j)].sub(&f.mul(&a[(col, j)]));
                }
            }
        }
        det
    }

    /// Solve a square system by Gaussian elimination with partial pivoting.
    /// `None` when the pivot falls below `tol`.
    pub fn solve(&self, b: &[C], tol: f64) -> Option<Vec<C>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut rhs = b.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| !a[(r, col)].is_zero(tol))
                .max_by(|&r1, &r2| a[(r1, col)].abs().total_cmp(&a[(r2, col)].abs()))?;
            if pivot != col {
                for j in 0..n {
                    let t = a[(col, j)].clone();
                    a[(col, j)] = a[(pivot, j)].clone();
                    a[(pivot, j)] = t;
                }
                rhs.swap(col, pivot);
            }
            let p_inv = a[(col, col)].inv()?;
            for r in 0..n {
                if r == col || a[(r, col)].is_zero(0.0) {
                    continue;
                }
                let f = a[(r, col)].mul(&p_inv);
                for j in col..n {
                    a[(r, j)] = a[(r, j)].sub(&f.mul(&a[(col, j)]));
                }
                rhs[r] = rhs[r].sub(&f.mul(&rhs[col]));
            }
        }
        Some(
            (0..n)
                .map(|i| rhs[i].mul(&a[(i, i)].inv().unwrap()))
                .collect(),
        )
    }

    /// Reduced row echelon form in place; returns the pivot columns. Rank
    /// decisions use `tol` scaled by the largest entry of the working matrix.
    pub fn rref(&mut self, tol: f64) -> Vec<usize> {
        let scale = self.data.iter().map(|c| c.abs()).fold(1.0, f64::max);
        let thresh = tol * scale;
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let pivot = (row..self.rows)
                .filter(|&r| !self[(r, col)].is_zero(thresh))
                .max_by(|&r1, &r2| self[(r1, col)].abs().total_cmp(&self[(r2, col)].abs()));
            let pivot = match pivot {
                Some(p) => p,
                None => continue,
            };
            if pivot != row {
                for j in 0..self.cols {
                    let t = self[(row, j)].clone();
                    self[(row, j)] = self[(pivot, j)].clone();
                    self[(pivot, j)] = t;
                }
            }
            let p_inv = self[(row, col)].inv().expect("pivot above threshold");
            for j in 0..self.cols {
                self[(row, j)] = self[(row, j)].mul(&p_inv);
            }
            for r in 0..self.rows {
                if r == row || self[(r, col)].is_zero(0.0) {
                    continue;
                }
                let f = self[(r, col)].clone();
                for j in 0..self.cols {
                    self[(r, j)] = self[(r, j)].sub(&f.mul(&self[(row, j)]));
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    /// Basis of the right nullspace, one column vector per free variable.
    pub fn nullspace(&self, tol: f64) -> Vec<Vec<C>> {
        let mut r = self.clone();
        let pivots = r.rref(tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = vec![C::zero(); self.cols];
                v[fc] = C::one();
                for (ri, &pc) in pivots.iter().enumerate() {
                    v[pc] = r[(ri, fc)].neg();
                }
                v
            })
            .collect()
    }

    /// Minimum-norm solution of a (possibly rank-deficient, possibly
    /// rectangular) consistent system. Returns `None` when inconsistent
    /// beyond `tol`.
    pub fn solve_min_norm(&self, b: &[C], tol: f64) -> Option<Vec<C>> {
        assert_eq!(b.len(), self.rows);
        // Augmented RREF gives a particular solution with free vars zeroed.
        let mut aug = CMat::zero(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let pivots = aug.rref(tol);
        if pivots.contains(&self.cols) {
            return None; // pivot in the RHS column: inconsistent
        }
        let mut particular = vec![C::zero(); self.cols];
        for (ri, &pc) in pivots.iter().enumerate() {
            particular[pc] = aug[(ri, self.cols)].clone();
        }
        // Project out the nullspace component: x* = x_p - N (N^H N)^{-1} N^H x_p.
        let null = self.nullspace(tol);
        if null.is_empty() {
            return Some(particular);
        }
        let k = null.len();
        let mut gram = CMat::zero(k, k);
        let mut rhs = vec![C::zero(); k];
        for (i, ni) in null.iter().enumerate() {
            for (j, nj) in null.iter().enumerate() {
                let mut acc = C::zero();
                for t in 0..self.cols {
                    acc = acc.add(&ni[t].conj().mul(&nj[t]));
                }
                gram[(i, j)] = acc;
            }
            let mut acc = C::zero();
            for t in 0..self.cols {
                acc = acc.add(&ni[t].conj().mul(&particular[t]));
            }
            rhs[i] = acc;
        }
        let coeffs = gram.solve(&rhs, 0.0)?;
        let mut out = particular;
        for (i, ni) in null.iter().enumerate() {
            for t in 0..self.cols {
                out[t] = out[t].sub(&coeffs[i].mul(&ni[t]));
            }
        }
        Some(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }
}

impl<C: Coeff> std::ops::Index<(usize, usize)> for CMat<C> {
    type Output = C;
    fn index(&self, (r, c): (usize, usize)) -> &C {
        &self.data[r * self.cols + c]
    }
}

impl<C: Coeff> std::ops::IndexMut<(usize, usize)> for CMat<C> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C {
        &mut self.data[r * self.cols + c]
    }
}

/// Lexicographic two-stage least-norm solve of `A_primary x + A_penalized y = b`:
/// first minimize `‖y‖` over all consistent choices, then take the
/// minimum-norm `x`. Used where a conjugacy equation leaves both a change of
/// coordinates (x) and normal-form coefficients (y) free, and the canonical
/// answer zeroes as much of the normal form as possible.
pub fn solve_lexicographic<C: Coeff>(
    a_primary: &CMat<C>,
    a_penalized: &CMat<C>,
    b: &[C],
    tol: f64,
) -> Option<(Vec<C>, Vec<C>)> {
    assert_eq!(a_primary.rows, a_penalized.rows);
    assert_eq!(b.len(), a_primary.rows);
    // Constrain y: Z^H (b - A_p y) = 0 for Z spanning Range(A_primary)^⊥,
    // i.e. Z = nullspace of A_primary^H as column vectors.
    let z_basis = a_primary.conj_transpose().nullspace(tol);
    let y = if z_basis.is_empty() {
        vec![C::zero(); a_penalized.cols]
    } else {
        let zr = z_basis.len();
        let mut zh_ap = CMat::zero(zr, a_penalized.cols);
        let mut zh_b = vec![C::zero(); zr];
        for (i, z) in z_basis.iter().enumerate() {
            for j in 0..a_penalized.cols {
                let mut acc = C::zero();
                for t in 0..a_penalized.rows {
                    acc = acc.add(&z[t].conj().mul(&a_penalized[(t, j)]));
                }
                zh_ap[(i, j)] = acc;
            }
            let mut acc = C::zero();
            for t in 0..b.len() {
                acc = acc.add(&z[t].conj().mul(&b[t]));
            }
            zh_b[i] = acc;
        }
        zh_ap.solve_min_norm(&zh_b, tol)?
    };
    let reduced: Vec<C> = (0..b.len())
        .map(|i| {
            let mut acc = b[i].clone();
            for j in 0..a_penalized.cols {
                acc = acc.sub(&a_penalized[(i, j)].mul(&y[j]));
            }
            acc
        })
        .collect();
    let x = a_primary.solve_min_norm(&reduced, tol)?;
    Some((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiseries::coeff::Cf64;
    use num::complex::Complex64;

    fn c(re: f64) -> Cf64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn solve_square() {
        let a = CMat::from_rows(&[vec![c(2.0), c(1.0)], vec![c(1.0), c(3.0)]]);
        let x = a.solve(&[c(5.0), c(10.0)], 1e-12).unwrap();
        assert!((x[0] - c(1.0)).norm() < 1e-12);
        assert!((x[1] - c(3.0)).norm() < 1e-12);
    }

    #[test]
    fn nullspace_and_min_norm() {
        // x + y = 2 has min-norm solution (1, 1).
        let a = CMat::from_rows(&[vec![c(1.0), c(1.0)]]);
        let x = a.solve_min_norm(&[c(2.0)], 1e-12).unwrap();
        assert!((x[0] - c(1.0)).norm() < 1e-12);
        assert!((x[1] - c(1.0)).norm() < 1e-12);
        // Inconsistent system is reported.
        let a = CMat::from_rows(&[vec![c(1.0), c(0.0)], vec![c(1.0), c(0.0)]]);
        assert!(a.solve_min_norm(&[c(1.0), c(2.0)], 1e-9).is_none());
    }

    #[test]
    fn lexicographic_prefers_zero_penalized() {
        // x + y_pen = 3 with invertible primary: y stays 0.
        let ap = CMat::from_rows(&[vec![c(1.0)]]);
        let apen = CMat::from_rows(&[vec![c(1.0)]]);
        let (x, y) = solve_lexicographic(&ap, &apen, &[c(3.0)], 1e-12).unwrap();
        assert!((x[0] - c(3.0)).norm() < 1e-12);
        assert!(y[0].norm() < 1e-12);
        // Singular primary: the penalized unknown must carry the value.
        let ap = CMat::from_rows(&[vec![c(0.0)]]);
        let (x, y) = solve_lexicographic(&ap, &apen, &[c(3.0)], 1e-12).unwrap();
        assert!(x[0].norm() < 1e-12);
        assert!((y[0] - c(3.0)).norm() < 1e-12);
    }
}
