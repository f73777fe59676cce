//! Multi-indices and graded monomial bases.
//!
//! A `MultiIndex` is an exponent vector α = (α₁, …, αₙ); the monomial it
//! names is x^α = x₁^α₁ ⋯ xₙ^αₙ. Indices are ordered graded-lexicographically
//! with the *last* variable least significant, so the degree-k basis in two
//! variables reads (x₁^k, x₁^{k-1}x₂, …, x₂^k). Every basis-indexed object in
//! the crate (moment matrices, Gram matrices) uses this order.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial, with its total degree cached.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exps: Vec<u32>,
    degree: u32,
}

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        let degree = exps.iter().sum();
        MultiIndex { exps, degree }
    }

    pub fn from_slice(exps: &[u32]) -> Self {
        Self::new(exps.to_vec())
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.exps.len()
    }

    /// Total degree |α|.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    /// Component-wise sum α + β (operands must agree on n).
    pub fn sum(&self, other: &MultiIndex) -> Result<MultiIndex> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: other.n(),
            });
        }
        Ok(MultiIndex::new(
            self.exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    /// Multinomial coefficient |α|! / (α₁! ⋯ αₙ!), exact in u128.
    pub fn multinomial(&self) -> u128 {
        let mut total = 0u32;
        let mut acc: u128 = 1;
        for &e in &self.exps {
            total += e;
            acc *= binomial_u128(total as u64, e as u64);
        }
        acc
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| {
                // Same degree: larger exponent on the earlier variable sorts
                // first, putting x₁^k ahead of x₂^k.
                for (a, b) in self.exps.iter().zip(&other.exps) {
                    match b.cmp(a) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
            .then_with(|| self.exps.len().cmp(&other.exps.len()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.exps.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(MultiIndex::new(Vec::<u32>::deserialize(deserializer)?))
    }
}

/// Exact binomial coefficient in u128 (multiplicative form).
pub fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All degree-k monomials in n variables, in the canonical order, with a
/// reverse lookup from index to position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    n: usize,
    k: u32,
    list: Vec<MultiIndex>,
    pos: HashMap<MultiIndex, usize>,
}

impl MonomialBasis {
    pub fn new(n: usize, k: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("need at least one variable".into()));
        }
        let mut list = Vec::new();
        let mut current = vec![0u32; n];
        fill(&mut list, &mut current, 0, k);
        debug_assert_eq!(
            list.len() as u128,
            binomial_u128((k as u64) + (n as u64) - 1, (n as u64) - 1)
        );
        let pos = list
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        Ok(MonomialBasis { n, k, list, pos })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.list
    }

    /// Position of α in the basis, if α belongs to it.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.pos.get(alpha).copied()
    }

    /// Evaluate the monomial vector m(x) = (x^α)_α at a point.
    pub fn eval_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self
            .list
            .iter()
            .map(|alpha| {
                alpha
                    .exps()
                    .iter()
                    .zip(x)
                    .map(|(&e, &xi)| xi.powi(e as i32))
                    .product()
            })
            .collect())
    }
}

/// Recursive generation: the exponent of the earliest variable descends from
/// the remaining degree, which produces the canonical order directly.
fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, var: usize, remaining: u32) {
    if var + 1 == current.len() {
        current[var] = remaining;
        out.push(MultiIndex::new(current.clone()));
        current[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e;
        fill(out, current, var + 1, remaining - e);
        current[var] = 0;
    }
}

/// Convenience: the degree-k basis in n variables (same as `MonomialBasis::new`).
pub fn monomial_basis(n: usize, k: u32) -> Result<MonomialBasis> {
    MonomialBasis::new(n, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    #[test]
    fn basis_order_matches_convention() {
        let b = monomial_basis(2, 2).unwrap();
        assert_eq!(
            b.indices(),
            &[mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])],
            "degree-2 basis in two variables"
        );
        let b = monomial_basis(3, 1).unwrap();
        assert_eq!(b.indices(), &[mi(&[1, 0, 0]), mi(&[0, 1, 0]), mi(&[0, 0, 1])]);
    }

    #[test]
    fn basis_sizes_are_binomials() {
        // |basis(n, k)| = C(k+n-1, n-1); for (3, 4) that is C(6, 2) = 15
        assert_eq!(monomial_basis(3, 4).unwrap().len(), 15);
        assert_eq!(monomial_basis(2, 6).unwrap().len(), 7);
        assert_eq!(monomial_basis(5, 2).unwrap().len(), 15);
        assert_eq!(monomial_basis(4, 0).unwrap().len(), 1);
    }

    #[test]
    fn order_is_total_and_graded() {
        let b = monomial_basis(3, 4).unwrap();
        let mut sorted = b.indices().to_vec();
        sorted.sort();
        assert_eq!(sorted, b.indices(), "generation order equals sort order");
        assert!(mi(&[1, 0, 0]) < mi(&[2, 0, 0]), "lower degree sorts first");
    }

    #[test]
    fn multinomials() {
        assert_eq!(mi(&[2, 3]).multinomial(), 10); // C(5, 2)
        assert_eq!(mi(&[1, 1, 1]).multinomial(), 6);
        assert_eq!(mi(&[4, 0]).multinomial(), 1);
        assert_eq!(mi(&[2, 1, 1]).multinomial(), 12);
    }

    #[test]
    fn position_lookup_and_eval() {
        let b = monomial_basis(2, 2).unwrap();
        assert_eq!(b.position(&mi(&[1, 1])), Some(1));
        assert_eq!(b.position(&mi(&[3, 0])), None);
        let v = b.eval_vector(&[2.0, 3.0]).unwrap();
        assert_eq!(v, vec![4.0, 6.0, 9.0]);
    }

    #[test]
    fn binomials_exact() {
        assert_eq!(binomial_u128(5, 2), 10);
        assert_eq!(binomial_u128(6, 2), 15);
        assert_eq!(binomial_u128(50, 25), 126_410_606_437_752);
        assert_eq!(binomial_u128(3, 5), 0);
    }
}
