//! Lazy noise-effect pattern generators in decoder query order.
//!
//! Patterns are enumerated as sorted lists of 1-based "ranks" and mapped to
//! bit positions on emission. For [`OrderKind::Hamming`] rank `v` is bit
//! `v - 1`. For [`OrderKind::LogisticRank`] rank 1 is the least reliable bit
//! and the ordering weight is the sum of ranks, so each weight class is the
//! set of integer partitions of that weight into distinct parts no larger
//! than `n`. Within a weight, fewer flips come first and equal-size lists are
//! in lexicographic order.

use serde::{Deserialize, Serialize};

use crate::channel::{log_no_flip, SoftObservation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderKind {
    /// Hard-detection GRAND: nondecreasing Hamming weight.
    Hamming,
    /// Basic ORBGRAND: nondecreasing logistic weight.
    LogisticRank,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryOrder {
    kind: OrderKind,
    n: usize,
    /// Bit index for each rank, least reliable first.
    rank_permutation: Vec<usize>,
}

impl QueryOrder {
    pub fn hamming(n: usize) -> Self {
        QueryOrder {
            kind: OrderKind::Hamming,
            n,
            rank_permutation: (0..n).collect(),
        }
    }

    /// Logistic-weight order over an explicit rank permutation.
    pub fn logistic(rank_permutation: Vec<usize>) -> Self {
        debug_assert!({
            let mut seen = vec![false; rank_permutation.len()];
            rank_permutation
                .iter()
                .all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
        });
        QueryOrder {
            kind: OrderKind::LogisticRank,
            n: rank_permutation.len(),
            rank_permutation,
        }
    }

    pub fn for_observation(kind: OrderKind, obs: &SoftObservation) -> Self {
        match kind {
            OrderKind::Hamming => Self::hamming(obs.len()),
            OrderKind::LogisticRank => Self::logistic(obs.by_reliability().to_vec()),
        }
    }

    pub fn kind(&self) -> OrderKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank_permutation(&self) -> &[usize] {
        &self.rank_permutation
    }

    /// Bit position of a 1-based rank.
    #[inline]
    pub fn position_of(&self, rank: u32) -> usize {
        self.rank_permutation[rank as usize - 1]
    }
}

/// A candidate noise effect: the bits to flip and its ordering weight.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryPattern {
    /// Distinct 0-based bit positions, ascending.
    pub positions: Vec<usize>,
    pub weight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum CursorState {
    Fresh,
    Active,
    Exhausted,
}

/// Resumable enumeration state, independent of the bit mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCursor {
    state: CursorState,
    weight: u64,
    parts: Vec<u32>,
    emitted: u64,
}

impl Default for PatternCursor {
    fn default() -> Self {
        PatternCursor {
            state: CursorState::Fresh,
            weight: 0,
            parts: Vec::new(),
            emitted: 0,
        }
    }
}

#[inline]
fn triangular(m: u64) -> u64 {
    m * (m + 1) / 2
}

/// Smallest value for the next of `c` strictly increasing parts, each above
/// `prev` and at most `n`, such that the `c` parts can sum to `s`.
#[inline]
fn first_choice(prev: u32, c: u64, s: u64, n: u64) -> Option<u32> {
    let prev = prev as u64;
    if c == 1 {
        return (s > prev && s <= n).then_some(s as u32);
    }
    let rest = c - 1;
    if rest > n {
        return None;
    }
    let max_rest = rest * n - rest * (rest - 1) / 2;
    let v = (prev + 1).max(s.saturating_sub(max_rest));
    if v > n || n - v < rest {
        return None;
    }
    if s < v + rest * v + triangular(rest) {
        return None;
    }
    Some(v as u32)
}

/// Appends the lexicographically smallest completion of `c` parts summing to
/// `s`. Leaves `parts` untouched when no completion exists.
fn complete(parts: &mut Vec<u32>, mut prev: u32, c: u64, mut s: u64, n: u64) -> bool {
    if first_choice(prev, c, s, n).is_none() {
        return false;
    }
    for remaining in (1..=c).rev() {
        let v = first_choice(prev, remaining, s, n).expect("feasible completion");
        parts.push(v);
        prev = v;
        s -= v as u64;
    }
    true
}

/// Advances `parts` to the next distinct-part partition of the same sum and
/// length, lexicographically.
fn next_partition(parts: &mut Vec<u32>, n: u64) -> bool {
    let m = parts.len();
    if m < 2 {
        return false;
    }
    let mut suffix = parts[m - 1] as u64;
    for i in (0..m - 1).rev() {
        suffix += parts[i] as u64;
        let c = (m - i) as u64;
        let prev = parts[i];
        if first_choice(prev, c, suffix, n).is_some() {
            parts.truncate(i);
            complete(parts, prev, c, suffix, n);
            return true;
        }
    }
    false
}

fn next_combination(parts: &mut [u32], n: u32) -> bool {
    let m = parts.len();
    for i in (0..m).rev() {
        let limit = n - (m - 1 - i) as u32;
        if parts[i] < limit {
            parts[i] += 1;
            for j in i + 1..m {
                parts[j] = parts[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

impl PatternCursor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current pattern as sorted 1-based ranks.
    pub fn ranks(&self) -> &[u32] {
        &self.parts
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    /// Number of patterns emitted so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn is_exhausted(&self) -> bool {
        self.state == CursorState::Exhausted
    }

    /// Moves to the next pattern. Returns `false` once all `2^n` patterns
    /// have been produced.
    pub fn advance(&mut self, kind: OrderKind, n: usize) -> bool {
        let advanced = match self.state {
            CursorState::Exhausted => false,
            CursorState::Fresh => {
                self.state = CursorState::Active;
                self.weight = 0;
                self.parts.clear();
                true
            }
            CursorState::Active => match kind {
                OrderKind::Hamming => self.advance_hamming(n),
                OrderKind::LogisticRank => self.advance_logistic(n),
            },
        };
        if advanced {
            self.emitted += 1;
        } else {
            self.state = CursorState::Exhausted;
        }
        advanced
    }

    fn advance_hamming(&mut self, n: usize) -> bool {
        if next_combination(&mut self.parts, n as u32) {
            return true;
        }
        let m = self.parts.len() + 1;
        if m > n {
            return false;
        }
        self.parts.clear();
        self.parts.extend(1..=m as u32);
        self.weight = m as u64;
        true
    }

    fn advance_logistic(&mut self, n: usize) -> bool {
        let n64 = n as u64;
        if next_partition(&mut self.parts, n64) {
            return true;
        }
        let mut m = self.parts.len() as u64 + 1;
        loop {
            if m > n64 || triangular(m) > self.weight {
                self.weight += 1;
                m = 1;
                if self.weight > triangular(n64) {
                    return false;
                }
                continue;
            }
            self.parts.clear();
            if complete(&mut self.parts, 0, m, self.weight, n64) {
                return true;
            }
            m += 1;
        }
    }
}

/// A pattern generator bound to one query order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternGenerator {
    order: QueryOrder,
    cursor: PatternCursor,
}

impl PatternGenerator {
    pub fn new(order: QueryOrder) -> Self {
        PatternGenerator {
            order,
            cursor: PatternCursor::new(),
        }
    }

    /// Continues from a previously saved cursor.
    pub fn resume(order: QueryOrder, cursor: PatternCursor) -> Self {
        PatternGenerator { order, cursor }
    }

    pub fn order(&self) -> &QueryOrder {
        &self.order
    }

    pub fn cursor(&self) -> &PatternCursor {
        &self.cursor
    }

    /// Advances and returns the new pattern in rank space, without allocating.
    #[inline]
    pub fn advance_ranks(&mut self) -> Option<&[u32]> {
        if self.cursor.advance(self.order.kind, self.order.n) {
            Some(self.cursor.ranks())
        } else {
            None
        }
    }

    pub fn next_pattern(&mut self) -> Option<QueryPattern> {
        self.advance_ranks()?;
        let mut positions: Vec<usize> = self
            .cursor
            .ranks()
            .iter()
            .map(|&r| self.order.position_of(r))
            .collect();
        positions.sort_unstable();
        Some(QueryPattern {
            positions,
            weight: self.cursor.weight(),
        })
    }
}

impl Iterator for PatternGenerator {
    type Item = QueryPattern;

    fn next(&mut self) -> Option<QueryPattern> {
        self.next_pattern()
    }
}

/// Natural-log probability that the noise effect equals `pattern` under
/// independent bit flips: `sum ln(1 - B_i) + sum_{i in pattern} ln(B_i / (1 - B_i))`.
pub fn pattern_log_probability(pattern: &QueryPattern, obs: &SoftObservation) -> f64 {
    let reliab = obs.reliab();
    let base: f64 = reliab.iter().map(|&l| log_no_flip(l)).sum();
    // ln(B / (1 - B)) = -l exactly.
    base - pattern.positions.iter().map(|&i| reliab[i]).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitBlock;
    use std::collections::HashSet;

    fn weights(kind: OrderKind, n: usize) -> Vec<(u64, Vec<u32>)> {
        let mut cursor = PatternCursor::new();
        let mut out = Vec::new();
        while cursor.advance(kind, n) {
            out.push((cursor.weight(), cursor.ranks().to_vec()));
        }
        out
    }

    /// All subsets of 1..=n sorted by (weight, size, lexicographic ranks).
    fn brute_force(kind: OrderKind, n: usize) -> Vec<(u64, Vec<u32>)> {
        let mut all: Vec<(u64, Vec<u32>)> = (0u32..1 << n)
            .map(|mask| {
                let ranks: Vec<u32> = (1..=n as u32)
                    .filter(|r| mask >> (r - 1) & 1 == 1)
                    .collect();
                let w = match kind {
                    OrderKind::Hamming => ranks.len() as u64,
                    OrderKind::LogisticRank => ranks.iter().map(|&r| r as u64).sum(),
                };
                (w, ranks)
            })
            .collect();
        all.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.len().cmp(&b.1.len()))
                .then(a.1.cmp(&b.1))
        });
        all
    }

    #[test]
    fn logistic_prefix_n4() {
        let got = weights(OrderKind::LogisticRank, 4);
        let expected: Vec<(u64, Vec<u32>)> = vec![
            (0, vec![]),
            (1, vec![1]),
            (2, vec![2]),
            (3, vec![3]),
            (3, vec![1, 2]),
            (4, vec![4]),
            (4, vec![1, 3]),
        ];
        assert_eq!(&got[..7], &expected[..]);
    }

    #[test]
    fn matches_brute_force_enumeration() {
        for n in 1..=12 {
            for kind in [OrderKind::Hamming, OrderKind::LogisticRank] {
                assert_eq!(weights(kind, n), brute_force(kind, n), "{kind:?} n={n}");
            }
        }
    }

    #[test]
    fn complete_and_monotone_up_to_16() {
        for n in [10usize, 13, 16] {
            for kind in [OrderKind::Hamming, OrderKind::LogisticRank] {
                let seq = weights(kind, n);
                assert_eq!(seq.len(), 1 << n);
                assert!(seq.windows(2).all(|w| w[0].0 <= w[1].0));
                let distinct: HashSet<_> = seq.iter().map(|(_, r)| r.clone()).collect();
                assert_eq!(distinct.len(), 1 << n);
            }
        }
    }

    #[test]
    fn exhaustion_is_sticky() {
        let mut cursor = PatternCursor::new();
        let mut count = 0;
        while cursor.advance(OrderKind::LogisticRank, 3) {
            count += 1;
        }
        assert_eq!(count, 8);
        assert!(cursor.is_exhausted());
        assert!(!cursor.advance(OrderKind::LogisticRank, 3));
        assert_eq!(cursor.emitted(), 8);
    }

    #[test]
    fn ranks_map_through_permutation() {
        let order = QueryOrder::logistic(vec![3, 0, 2, 1]);
        let pats: Vec<QueryPattern> = PatternGenerator::new(order).take(5).collect();
        assert!(pats[0].positions.is_empty());
        assert_eq!(pats[1].positions, vec![3]);
        assert_eq!(pats[2].positions, vec![0]);
        assert_eq!(pats[3].positions, vec![2]);
        assert_eq!(pats[4].positions, vec![0, 3]);
        assert_eq!(pats[4].weight, 3);
    }

    #[test]
    fn resume_from_serialized_cursor() {
        let order = QueryOrder::logistic((0..20).rev().collect());
        for split in [0usize, 1, 7, 150, 999] {
            let mut gen = PatternGenerator::new(order.clone());
            let head: Vec<_> = gen.by_ref().take(split).collect();
            assert_eq!(head.len(), split);
            let json = serde_json::to_string(gen.cursor()).unwrap();
            let cursor: PatternCursor = serde_json::from_str(&json).unwrap();
            let resumed: Vec<_> = PatternGenerator::resume(order.clone(), cursor)
                .take(500)
                .collect();
            let tail: Vec<_> = gen.take(500).collect();
            assert_eq!(resumed, tail);
        }
    }

    #[test]
    fn log_probability_of_empty_pattern() {
        let p: f64 = 0.05;
        let l = ((1.0 - p) / p).ln();
        let obs = SoftObservation::from_parts(BitBlock::zeros(16), vec![l; 16]).unwrap();
        let empty = QueryPattern {
            positions: vec![],
            weight: 0,
        };
        assert!((pattern_log_probability(&empty, &obs) - 16.0 * (1.0 - p).ln()).abs() < 1e-12);
    }

    #[test]
    fn log_probabilities_normalise() {
        let l = (0.9f64 / 0.1).ln();
        let obs = SoftObservation::from_parts(BitBlock::zeros(2), vec![l, l]).unwrap();
        let total: f64 = PatternGenerator::new(QueryOrder::hamming(2))
            .map(|p| pattern_log_probability(&p, &obs).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_probability_matches_direct_product() {
        let reliab = [0.3, 2.5, 0.01, 4.0, 1.2, 0.7, 3.3, 0.05];
        let obs = SoftObservation::from_parts(BitBlock::zeros(8), reliab.to_vec()).unwrap();
        let b = obs.flip_prob().to_vec();
        for pat in PatternGenerator::new(QueryOrder::for_observation(OrderKind::LogisticRank, &obs))
        {
            let direct: f64 = (0..8)
                .map(|i| {
                    if pat.positions.contains(&i) {
                        b[i]
                    } else {
                        1.0 - b[i]
                    }
                })
                .product();
            assert!((pattern_log_probability(&pat, &obs).exp() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_logistic_weight_is_equally_likely_for_linear_reliability() {
        // Reliabilities proportional to rank, bits shuffled.
        let perm = [5usize, 2, 7, 0, 3, 6, 1, 4, 9, 8];
        let mut reliab = vec![0.0; 10];
        for (rank0, &bit) in perm.iter().enumerate() {
            reliab[bit] = 0.37 * (rank0 + 1) as f64;
        }
        let obs = SoftObservation::from_parts(BitBlock::zeros(10), reliab).unwrap();
        let order = QueryOrder::for_observation(OrderKind::LogisticRank, &obs);
        assert_eq!(order.rank_permutation(), &perm);
        let mut by_weight: std::collections::HashMap<u64, f64> = Default::default();
        for pat in PatternGenerator::new(order) {
            let lp = pattern_log_probability(&pat, &obs);
            let first = *by_weight.entry(pat.weight).or_insert(lp);
            assert!((first - lp).abs() < 1e-9);
        }
    }
}
