//! Integer and rational exponent matrices.
//!
//! Convention: for variables `x = (x_1..x_a)` and an `a×b` matrix `M`, the
//! power `x^M` is the `b`-tuple with component `k = ∏_l x_l^{M[l][k]}` —
//! rows index variables, columns index output components. Multi-indices act
//! as column vectors, so a matrix applies to an index as `(M n)_l = Σ_k
//! M[l][k] n_k`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use super::index::MultiIndex;

/// Dense integer matrix for germ exponent data.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExponentMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<i64>,
}

impl ExponentMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        ExponentMatrix { rows, cols, data }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        ExponentMatrix::new(rows, cols, vec![0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    /// Permutation matrix with `M[perm[k]][k] = 1`, i.e. `x^M = (x_{perm(k)})_k`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = Self::zero(n, n);
        for (k, &p) in perm.iter().enumerate() {
            m[(p, k)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        ExponentMatrix::new(r, c, data)
    }

    pub fn column(&self, k: usize) -> Vec<i64> {
        (0..self.rows).map(|l| self[(l, k)]).collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&e| e >= 0)
    }

    /// Exactly one 1 per row and per column, zeros elsewhere.
    pub fn is_permutation(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let n = self.rows;
        let mut row_seen = vec![false; n];
        for k in 0..n {
            let mut hit = None;
            for l in 0..n {
                match self[(l, k)] {
                    0 => {}
                    1 => {
                        if hit.is_some() {
                            return false;
                        }
                        hit = Some(l);
                    }
                    _ => return false,
                }
            }
            match hit {
                Some(l) if !row_seen[l] => row_seen[l] = true,
                _ => return false,
            }
        }
        true
    }

    /// For a permutation matrix, the map `k -> p(k)` with `M[p(k)][k] = 1`.
    pub fn permutation_map(&self) -> Option<Vec<usize>> {
        if !self.is_permutation() {
            return None;
        }
        Some(
            (0..self.cols)
                .map(|k| (0..self.rows).find(|&l| self[(l, k)] == 1).unwrap())
                .collect(),
        )
    }

    pub fn matmul(&self, rhs: &ExponentMatrix) -> ExponentMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = ExponentMatrix::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn pow(&self, e: usize) -> ExponentMatrix {
        assert_eq!(self.rows, self.cols);
        let mut acc = ExponentMatrix::identity(self.rows);
        for _ in 0..e {
            acc = acc.matmul(self);
        }
        acc
    }

    /// Apply to a multi-index as a column vector.
    pub fn apply_index(&self, n: &MultiIndex) -> MultiIndex {
        assert_eq!(self.cols, n.dim());
        let mut out = vec![0u32; self.rows];
        for l in 0..self.rows {
            let mut acc: i64 = 0;
            for k in 0..self.cols {
                acc += self[(l, k)] * n.0[k] as i64;
            }
            assert!(acc >= 0, "negative exponent from matrix action");
            out[l] = acc as u32;
        }
        MultiIndex(out)
    }

    /// Exact determinant over the integers.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        det_big(
            &self
                .data
                .iter()
                .map(|&e| BigInt::from(e))
                .collect::<Vec<_>>(),
            self.rows,
        )
    }

    pub fn transpose(&self) -> ExponentMatrix {
        let mut out = ExponentMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ExponentMatrix {
    type Output = i64;
    fn index(&self, (r, c): (usize, usize)) -> &i64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ExponentMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut i64 {
        &mut self.data[r * self.cols + c]
    }
}

fn det_big(data: &[BigInt], n: usize) -> BigInt {
    // Cofactor expansion; matrices here are at most d×d with d small.
    if n == 0 {
        return BigInt::one();
    }
    if n == 1 {
        return data[0].clone();
    }
    let mut acc = BigInt::zero();
    for j in 0..n {
        let a = &data[j];
        if a.is_zero() {
            continue;
        }
        let mut minor = Vec::with_capacity((n - 1) * (n - 1));
        for r in 1..n {
            for c in 0..n {
                if c != j {
                    minor.push(data[r * n + c].clone());
                }
            }
        }
        let m = det_big(&minor, n - 1);
        if j % 2 == 0 {
            acc += a * m;
        } else {
            acc -= a * m;
        }
    }
    acc
}

/// Dense matrix of exact rationals; used for inverse powers `D^{-n}`.
#[derive(Clone, Debug)]
pub struct RationalMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn from_exponents(m: &ExponentMatrix) -> Self {
        RationalMatrix {
            rows: m.rows,
            cols: m.cols,
            data: (0..m.rows * m.cols)
                .map(|i| BigRational::from_integer(BigInt::from(m[(i / m.cols, i % m.cols)])))
                .collect(),
        }
    }

    pub fn from_rows(rows: &[Vec<BigRational>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        RationalMatrix { rows: r, cols: c, data }
    }

    pub fn matmul(&self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = RationalMatrix::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)].clone();
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let t = &a * &rhs[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    /// Exact inverse by Gauss-Jordan; `None` if singular.
    pub fn inverse(&self) -> Option<RationalMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RationalMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] = &a[(col, j)] / &p;
                inv[(col, j)] = &inv[(col, j)] / &p;
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                for j in 0..n {
                    let t = &f * &a[(col, j)];
                    a[(r, j)] -= t;
                    let t = &f * &inv[(col, j)];
                    inv[(r, j)] -= t;
                }
            }
        }
        Some(inv)
    }

    /// Max absolute value of the entries, as f64.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .iter()
            .map(|q| q.to_f64_lossy().abs())
            .fold(0.0, f64::max)
    }
}

trait ToF64Lossy {
    fn to_f64_lossy(&self) -> f64;
}

impl ToF64Lossy for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        num::ToPrimitive::to_f64(self).unwrap_or(if self.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        })
    }
}

impl std::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = BigRational;
    fn index(&self, (r, c): (usize, usize)) -> &BigRational {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut BigRational {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_detection() {
        let swap = ExponentMatrix::from_rows(&[vec![0, 1], vec![1, 0]]);
        assert!(swap.is_permutation());
        assert_eq!(swap.permutation_map().unwrap(), vec![1, 0]);
        let not = ExponentMatrix::from_rows(&[vec![2, 0], vec![0, 1]]);
        assert!(!not.is_permutation());
    }

    #[test]
    fn integer_determinant() {
        let d = ExponentMatrix::from_rows(&[vec![2, 1], vec![1, 0]]);
        assert_eq!(d.det(), BigInt::from(-1));
        let a = ExponentMatrix::from_rows(&[vec![1, 1, 1], vec![0, 0, 1], vec![0, 0, 2]]);
        assert_eq!(a.det(), BigInt::zero());
    }

    #[test]
    fn rational_inverse_roundtrip() {
        let d = ExponentMatrix::from_rows(&[vec![2, 1], vec![1, 0]]);
        let q = RationalMatrix::from_exponents(&d);
        let inv = q.inverse().unwrap();
        let id = q.matmul(&inv);
        assert_eq!(id[(0, 0)], BigRational::one());
        assert_eq!(id[(0, 1)], BigRational::zero());
        assert_eq!(id[(1, 1)], BigRational::one());
    }
}
