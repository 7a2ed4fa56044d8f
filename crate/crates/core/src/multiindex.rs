//! Multi-index sets for polynomial bases: the full total-degree set and the
//! reduced set that caps the number of interacting variables.
//!
//! Ordering is graded lexicographic: total degree ascending, ties broken so
//! that the index with the larger exponent at the first differing coordinate
//! comes first. The first index is always the zero index (the constant
//! monomial). This ordering is fixed so that whitening matrices and
//! serialized surrogates are reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of basis functions; guards against accidental
/// full-basis explosions in high dimensions.
pub const DEFAULT_CARDINALITY_CAP: u128 = 1_000_000;

/// Degrees above this are rejected outright; exponents are stored as `u8`.
pub const MAX_DEGREE: u32 = 255;

/// A single monomial exponent vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    pub exponents: Vec<u8>,
}

impl MultiIndex {
    pub fn zero(dimension: usize) -> Self {
        MultiIndex {
            exponents: vec![0; dimension],
        }
    }

    /// Sum of exponents.
    pub fn total_degree(&self) -> u32 {
        self.exponents.iter().map(|&e| u32::from(e)).sum()
    }

    /// Number of strictly positive exponents.
    pub fn interaction_order(&self) -> u32 {
        self.exponents.iter().filter(|&&e| e > 0).count() as u32
    }

    pub fn is_zero(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    /// Graded-lex comparison key: degree ascending, then exponents such that
    /// the larger exponent at the first differing coordinate sorts first.
    pub fn graded_lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

/// Truncation kind of a multi-index set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    /// All indices with total degree <= m.
    Full { degree: u32 },
    /// Indices with total degree <= m and at most `interaction_order` nonzero
    /// exponents.
    Reduced { interaction_order: usize, degree: u32 },
}

/// Ordered multi-index set with its cardinality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    pub dimension: usize,
    pub kind: SetKind,
    pub indices: Vec<MultiIndex>,
}

impl MultiIndexSet {
    pub fn cardinality(&self) -> usize {
        self.indices.len()
    }
}

fn checked_binomial(n: u64, k: u64) -> Result<u128> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul(u128::from(n - k + i))
            .ok_or_else(|| Error::ArithmeticOverflow(format!("binomial({n}, {k})")))?;
        acc /= u128::from(i); // exact: product of i consecutive integers is divisible by i!
    }
    Ok(acc)
}

/// binom(n, k), or an overflow error.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    checked_binomial(n, k)
}

/// Closed-form cardinality of the full set: binom(N+m, m).
pub fn cardinality_full(dimension: usize, degree: u32) -> Result<u128> {
    if dimension == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    binomial(dimension as u64 + u64::from(degree), u64::from(degree))
}

/// Closed-form cardinality of the reduced set:
/// 1 + sum_{s=1..S} binom(N, s) * binom(m, s).
pub fn cardinality_reduced(dimension: usize, interaction_order: usize, degree: u32) -> Result<u128> {
    validate_reduced_params(dimension, interaction_order, degree)?;
    let mut total: u128 = 1;
    for s in 1..=interaction_order as u64 {
        let term = binomial(dimension as u64, s)?
            .checked_mul(binomial(u64::from(degree), s)?)
            .ok_or_else(|| Error::ArithmeticOverflow("reduced cardinality term".into()))?;
        total = total
            .checked_add(term)
            .ok_or_else(|| Error::ArithmeticOverflow("reduced cardinality sum".into()))?;
    }
    Ok(total)
}

fn validate_reduced_params(dimension: usize, interaction_order: usize, degree: u32) -> Result<()> {
    if dimension == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if interaction_order > dimension {
        return Err(Error::InvalidArgument(format!(
            "interaction order {interaction_order} exceeds dimension {dimension}"
        )));
    }
    if u64::from(degree) < interaction_order as u64 {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} is smaller than interaction order {interaction_order}"
        )));
    }
    if degree > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// Full total-degree set with the default cardinality cap.
pub fn generate_full(dimension: usize, degree: u32) -> Result<MultiIndexSet> {
    generate_full_with_cap(dimension, degree, DEFAULT_CARDINALITY_CAP)
}

pub fn generate_full_with_cap(dimension: usize, degree: u32, cap: u128) -> Result<MultiIndexSet> {
    if dimension == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if degree > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    let cardinality = cardinality_full(dimension, degree)?;
    if cardinality > cap {
        return Err(Error::SizeOverflow { cardinality, cap });
    }
    let indices = enumerate(dimension, dimension, degree);
    debug_assert_eq!(indices.len() as u128, cardinality);
    Ok(MultiIndexSet {
        dimension,
        kind: SetKind::Full { degree },
        indices,
    })
}

/// Reduced set with the default cardinality cap.
pub fn generate_reduced(
    dimension: usize,
    interaction_order: usize,
    degree: u32,
) -> Result<MultiIndexSet> {
    generate_reduced_with_cap(dimension, interaction_order, degree, DEFAULT_CARDINALITY_CAP)
}

pub fn generate_reduced_with_cap(
    dimension: usize,
    interaction_order: usize,
    degree: u32,
    cap: u128,
) -> Result<MultiIndexSet> {
    validate_reduced_params(dimension, interaction_order, degree)?;
    let cardinality = cardinality_reduced(dimension, interaction_order, degree)?;
    if cardinality > cap {
        return Err(Error::SizeOverflow { cardinality, cap });
    }
    let indices = enumerate(dimension, interaction_order, degree);
    debug_assert_eq!(indices.len() as u128, cardinality);
    Ok(MultiIndexSet {
        dimension,
        kind: SetKind::Reduced {
            interaction_order,
            degree,
        },
        indices,
    })
}

/// Enumerate indices degree by degree, each degree in descending-lex order,
/// keeping only those with at most `max_nonzero` positive exponents. This
/// yields the graded-lex order directly without sorting.
fn enumerate(dimension: usize, max_nonzero: usize, degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u8; dimension];
    for d in 0..=degree {
        place(&mut out, &mut current, 0, d, max_nonzero);
    }
    out
}

fn place(
    out: &mut Vec<MultiIndex>,
    current: &mut Vec<u8>,
    position: usize,
    remaining: u32,
    nonzero_budget: usize,
) {
    if position == current.len() - 1 {
        if (remaining == 0 || nonzero_budget > 0) && remaining <= u32::from(u8::MAX) {
            current[position] = remaining as u8;
            out.push(MultiIndex {
                exponents: current.clone(),
            });
            current[position] = 0;
        }
        return;
    }
    // A zero budget forces all remaining exponents to zero.
    if nonzero_budget == 0 {
        if remaining == 0 {
            out.push(MultiIndex {
                exponents: current.clone(),
            });
        }
        return;
    }
    let max_here = remaining.min(u32::from(u8::MAX));
    for value in (0..=max_here).rev() {
        current[position] = value as u8;
        let budget = if value > 0 {
            nonzero_budget - 1
        } else {
            nonzero_budget
        };
        place(out, current, position + 1, remaining - value, budget);
        current[position] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_cardinalities_match_reported_growth() {
        assert_eq!(cardinality_full(20, 3).unwrap(), 1771);
        assert_eq!(cardinality_full(50, 3).unwrap(), 23426);
        assert_eq!(generate_full(20, 3).unwrap().cardinality(), 1771);
    }

    #[test]
    fn degree_zero_is_constant_only() {
        let set = generate_full(3, 0).unwrap();
        assert_eq!(set.cardinality(), 1);
        assert_eq!(set.indices[0], MultiIndex::zero(3));
    }

    #[test]
    fn univariate_reduced_demands_nm_plus_one() {
        assert_eq!(generate_reduced(36, 1, 2).unwrap().cardinality(), 73);
        assert_eq!(generate_reduced(28, 1, 3).unwrap().cardinality(), 85);
        assert_eq!(cardinality_reduced(36, 1, 3).unwrap(), 109);
    }

    #[test]
    fn bivariate_two_dim_enumeration() {
        let set = generate_reduced(2, 2, 2).unwrap();
        let got: Vec<Vec<u8>> = set.indices.iter().map(|i| i.exponents.clone()).collect();
        assert_eq!(
            got,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        assert_eq!(cardinality_reduced(2, 2, 2).unwrap(), 6);
    }

    #[test]
    fn bivariate_closed_form_matches_full_at_small_degree() {
        // S = min(N, m) makes the reduced set coincide with the full set.
        assert_eq!(cardinality_reduced(36, 2, 2).unwrap(), 703);
        assert_eq!(cardinality_full(36, 2).unwrap(), 703);
    }

    #[test]
    fn zero_interaction_order_keeps_only_constant() {
        assert_eq!(cardinality_reduced(7, 0, 4).unwrap(), 1);
        assert_eq!(generate_reduced(7, 0, 4).unwrap().cardinality(), 1);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(generate_full(0, 2).is_err());
        assert!(generate_reduced(3, 4, 5).is_err());
        assert!(generate_reduced(3, 2, 1).is_err());
        assert!(matches!(
            generate_full_with_cap(50, 3, 10_000),
            Err(Error::SizeOverflow { .. })
        ));
    }

    #[test]
    fn first_index_is_zero_and_order_is_graded_lex() {
        let set = generate_reduced(4, 2, 3).unwrap();
        assert!(set.indices[0].is_zero());
        for pair in set.indices.windows(2) {
            assert_eq!(
                pair[0].graded_lex_cmp(&pair[1]),
                std::cmp::Ordering::Less,
                "not strictly increasing: {:?} then {:?}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn enumeration_matches_closed_form_exhaustively() {
        for n in 1..=8usize {
            for s in 0..=n {
                for m in (s as u32)..=5 {
                    let set = generate_reduced(n, s, m).unwrap();
                    let closed = cardinality_reduced(n, s, m).unwrap();
                    assert_eq!(set.cardinality() as u128, closed, "N={n} S={s} m={m}");
                    for idx in &set.indices {
                        assert!(idx.interaction_order() as usize <= s);
                        assert!(idx.total_degree() <= m);
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_at_max_interaction_equals_full() {
        for (n, m) in [(3usize, 5u32), (5, 3), (4, 4)] {
            let s = n.min(m as usize);
            let full = generate_full(n, m).unwrap();
            let reduced = generate_reduced(n, s, m).unwrap();
            assert_eq!(full.indices, reduced.indices);
        }
    }

    #[test]
    fn invariants_hold_per_index() {
        let set = generate_full(3, 4).unwrap();
        for idx in &set.indices {
            let sum: u32 = idx.exponents.iter().map(|&e| u32::from(e)).sum();
            assert_eq!(idx.total_degree(), sum);
            assert_eq!(
                idx.interaction_order(),
                idx.exponents.iter().filter(|&&e| e > 0).count() as u32
            );
        }
    }

    proptest! {
        #[test]
        fn reduced_cardinality_bounded_by_full(n in 1usize..10, s in 0usize..10, m in 0u32..7) {
            let s = s.min(n);
            let m = m.max(s as u32);
            let reduced = cardinality_reduced(n, s, m).unwrap();
            let full = cardinality_full(n, m).unwrap();
            prop_assert!(reduced <= full);
            if s == n.min(m as usize) {
                prop_assert_eq!(reduced, full);
            }
        }

        #[test]
        fn regeneration_is_byte_identical(n in 1usize..7, s in 0usize..7, m in 0u32..6) {
            let s = s.min(n);
            let m = m.max(s as u32);
            let a = generate_reduced(n, s, m).unwrap();
            let b = generate_reduced(n, s, m).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
