//! Multi-indices `J = (j_1, ..., j_n)` and their enumeration by total degree.

use std::cmp::Ordering;
use std::fmt;

use crate::special::ln_factorial;

/// An `n`-tuple of nonnegative integers.
///
/// Ordering is graded: first by total degree, then lexicographically
/// *descending* within a degree, so `(2,0) < (1,1) < (0,2)`. This matches the
/// order produced by [`enumerate_degree`] and is the canonical term order used
/// by polynomial evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(parts: Vec<u32>) -> Self {
        assert!(!parts.is_empty(), "multi-index must have length >= 1");
        Self(parts)
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    /// The unit index `e_i` of length `n`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut parts = vec![0; n];
        parts[i] = 1;
        Self::new(parts)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// `|J| = j_1 + ... + j_n`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&j| j == 0)
    }

    /// `ln(J!) = sum_i ln(j_i!)`.
    pub fn log_factorial(&self) -> f64 {
        self.0.iter().map(|&j| ln_factorial(j as u64)).sum()
    }

    /// Componentwise sum, used when multiplying monomials.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(parts: Vec<u32>) -> Self {
        Self::new(parts)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(parts: [u32; N]) -> Self {
        Self::new(parts.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices of length `n` and total degree `k`, lexicographically
/// descending. There are `C(k+n-1, n-1)` of them.
pub fn enumerate_degree(n: usize, k: u32) -> Vec<MultiIndex> {
    assert!(n >= 1, "enumerate_degree needs n >= 1");
    let mut out = Vec::new();
    let mut parts = vec![0u32; n];
    fill(&mut parts, 0, k, &mut out);
    out
}

fn fill(parts: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == parts.len() {
        parts[pos] = remaining;
        out.push(MultiIndex(parts.to_vec()));
        return;
    }
    for j in (0..=remaining).rev() {
        parts[pos] = j;
        fill(parts, pos + 1, remaining - j, out);
    }
}

/// All multi-indices of length `n` with `|J| <= max_degree`, grouped by degree.
pub fn enumerate_up_to(n: usize, max_degree: u32) -> Vec<MultiIndex> {
    (0..=max_degree).flat_map(|k| enumerate_degree(n, k)).collect()
}
