//! Multi-indices of monomial exponents.
//!
//! The total order is graded then lexicographic: compare total degree first,
//! then entries left to right. This is the canonical term order used for all
//! deterministic iteration and printing.

use std::cmp::Ordering;
use std::fmt;

/// Exponent vector of a monomial in `d` variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// The unit index `e_k`.
    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = vec![0; dim];
        v[k] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|n|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Entrywise difference, `None` unless `other ≼ self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Partial order `≼`: entrywise less-or-equal.
    pub fn le_partial(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Projection onto the coordinate range `[lo, hi)`.
    pub fn slice(&self, lo: usize, hi: usize) -> MultiIndex {
        MultiIndex(self.0[lo..hi].to_vec())
    }

    /// True when all nonzero exponents sit in `[lo, hi)`.
    pub fn supported_in(&self, lo: usize, hi: usize) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, &e)| e == 0 || (lo <= i && i < hi))
    }

    /// Degree of the restriction to `[lo, hi)`.
    pub fn degree_in(&self, lo: usize, hi: usize) -> u32 {
        self.0[lo..hi].iter().sum()
    }

    /// Re-index by a coordinate permutation: `result[perm[i]] = self[i]`.
    pub fn permute(&self, perm: &[usize]) -> MultiIndex {
        let mut out = vec![0; self.dim()];
        for (i, &e) in self.0.iter().enumerate() {
            out[perm[i]] = e;
        }
        MultiIndex(out)
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices of dimension `dim` with total degree exactly `deg`,
/// in graded-lex order.
pub fn indices_of_degree(dim: usize, deg: u32) -> Vec<MultiIndex> {
    if dim == 0 {
        return if deg == 0 { vec![MultiIndex(Vec::new())] } else { Vec::new() };
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; dim];
    fill(&mut out, &mut cur, 0, deg);
    out
}

fn fill(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, rem: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = rem;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for e in 0..=rem {
        cur[pos] = e;
        fill(out, cur, pos + 1, rem - e);
    }
    cur[pos] = 0;
}

/// All multi-indices with `1 <= |n| <= max_deg`, in graded-lex order.
pub fn indices_up_to(dim: usize, max_deg: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for d in 1..=max_deg {
        out.extend(indices_of_degree(dim, d));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_matches_reference_listing() {
        // Reference listing for d = 3:
        // (0,0,1)<(0,1,0)<(1,0,0)<(0,0,2)<(0,1,1)<(0,2,0)<(1,0,1)<(1,1,0)<(2,0,0)
        let mut all = indices_up_to(3, 2);
        let sorted = {
            let mut v = all.clone();
            v.sort();
            v
        };
        assert_eq!(all, sorted);
        all.truncate(9);
        let expect: Vec<MultiIndex> = [
            [0, 0, 1],
            [0, 1, 0],
            [1, 0, 0],
            [0, 0, 2],
            [0, 1, 1],
            [0, 2, 0],
            [1, 0, 1],
            [1, 1, 0],
            [2, 0, 0],
        ]
        .iter()
        .map(|v| MultiIndex(v.to_vec()))
        .collect();
        assert_eq!(all, expect);
    }

    #[test]
    fn partial_order_implies_total_order() {
        let a = MultiIndex(vec![1, 0, 2]);
        let b = MultiIndex(vec![1, 1, 2]);
        assert!(a.le_partial(&b));
        assert!(a < b);
        assert!(!b.le_partial(&a));
    }

    #[test]
    fn degree_shell_count() {
        // #monomials of degree m in d vars = C(m+d-1, d-1)
        assert_eq!(indices_of_degree(3, 4).len(), 15);
        assert_eq!(indices_of_degree(4, 8).len(), 165);
    }
}
