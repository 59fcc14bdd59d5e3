//! The GRAND query loop with LLR-thresholded abandonment.

use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::channel::SoftObservation;
use crate::codes::LinearCode;
use crate::error::{Error, Result};
use crate::patterns::{OrderKind, PatternCursor, QueryOrder};
use crate::softout::{ConfidenceLedger, LlrReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodePolicy {
    /// Abandon when the confidence LLR of the next query drops below this
    /// many bits. `None` never abandons on confidence.
    pub tau: Option<f64>,
    /// Hard cap on queries, independent of `tau`.
    pub max_queries: u64,
    pub order: OrderKind,
}

impl DecodePolicy {
    pub fn new(order: OrderKind, tau: Option<f64>, max_queries: u64) -> Result<Self> {
        let policy = DecodePolicy {
            tau,
            max_queries,
            order,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Policy with the default cap of `8 * 2^(n-k)` queries.
    pub fn for_code(code: &LinearCode, order: OrderKind, tau: Option<f64>) -> Self {
        DecodePolicy {
            tau,
            max_queries: Self::default_max_queries(code.redundancy()),
            order,
        }
    }

    pub fn default_max_queries(redundancy: usize) -> u64 {
        if redundancy >= 60 {
            u64::MAX
        } else {
            8u64 << redundancy
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_queries == 0 {
            return Err(Error::InvalidPolicy(
                "max_queries must be at least 1".into(),
            ));
        }
        if let Some(t) = self.tau {
            if !t.is_finite() {
                return Err(Error::InvalidPolicy(format!("tau must be finite, got {t}")));
            }
        }
        Ok(())
    }

    /// Short label used in reports: `none` or the threshold value.
    pub fn label(&self) -> String {
        let order = match self.order {
            OrderKind::Hamming => "grand",
            OrderKind::LogisticRank => "orbgrand",
        };
        match self.tau {
            None => format!("{order}/tau=none"),
            Some(t) => format!("{order}/tau={t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbandonReason {
    LlrBelowTau,
    QueryCapReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DecodeOutcome {
    Decoded {
        word: BitBlock,
        q: u64,
        report: LlrReport,
    },
    Abandoned {
        q: u64,
        reason: AbandonReason,
    },
}

impl DecodeOutcome {
    pub fn q(&self) -> u64 {
        match self {
            DecodeOutcome::Decoded { q, .. } | DecodeOutcome::Abandoned { q, .. } => *q,
        }
    }

    pub fn word(&self) -> Option<&BitBlock> {
        match self {
            DecodeOutcome::Decoded { word, .. } => Some(word),
            DecodeOutcome::Abandoned { .. } => None,
        }
    }

    pub fn is_abandoned(&self) -> bool {
        matches!(self, DecodeOutcome::Abandoned { .. })
    }
}

/// One query as seen by a tracing observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryStep {
    pub q: u64,
    /// Flipped bit positions, in rank order.
    pub positions: Vec<usize>,
    pub pattern_log_prob: f64,
    pub llr_bits: f64,
    /// `None` when the query was abandoned before the membership test.
    pub is_codeword: Option<bool>,
}

pub fn decode(
    code: &LinearCode,
    obs: &SoftObservation,
    policy: &DecodePolicy,
) -> Result<DecodeOutcome> {
    decode_inner(code, obs, policy, None)
}

/// Like [`decode`], reporting every query to `observer`.
pub fn decode_traced(
    code: &LinearCode,
    obs: &SoftObservation,
    policy: &DecodePolicy,
    observer: &mut dyn FnMut(&QueryStep),
) -> Result<DecodeOutcome> {
    decode_inner(code, obs, policy, Some(observer))
}

fn decode_inner(
    code: &LinearCode,
    obs: &SoftObservation,
    policy: &DecodePolicy,
    mut observer: Option<&mut dyn FnMut(&QueryStep)>,
) -> Result<DecodeOutcome> {
    if obs.len() != code.n() {
        return Err(Error::LengthMismatch {
            expected: code.n(),
            actual: obs.len(),
        });
    }
    policy.validate()?;

    let n = code.n();
    let order = QueryOrder::for_observation(policy.order, obs);
    let perm = order.rank_permutation();
    let reliab = obs.reliab();
    let columns = code.parity_columns();
    // Rank-indexed tables; index 0 is unused so ranks index directly.
    let mut rank_reliab = Vec::with_capacity(n + 1);
    let mut rank_column = Vec::with_capacity(n + 1);
    rank_reliab.push(0.0);
    rank_column.push(0u64);
    for &bit in perm {
        rank_reliab.push(reliab[bit]);
        rank_column.push(columns[bit]);
    }

    let target = code.syndrome(obs.hard())?;
    let base = obs.log_no_flip_total();
    let mut ledger = ConfidenceLedger::new(code.redundancy() as u32);
    let mut cursor = PatternCursor::new();

    while cursor.advance(policy.order, n) {
        let ranks = cursor.ranks();
        let mut syndrome = 0u64;
        let mut penalty = 0.0;
        for &r in ranks {
            syndrome ^= rank_column[r as usize];
            penalty += rank_reliab[r as usize];
        }
        let log_prob = base - penalty;
        ledger.record_unchecked(log_prob);
        let q = ledger.q();

        let llr = if policy.tau.is_some() || observer.is_some() {
            ledger.llr_bits_unchecked()
        } else {
            f64::NAN
        };
        let below = policy.tau.is_some_and(|t| llr < t);
        let hit = !below && syndrome == target;

        if let Some(obs_fn) = observer.as_mut() {
            obs_fn(&QueryStep {
                q,
                positions: ranks.iter().map(|&r| perm[r as usize - 1]).collect(),
                pattern_log_prob: log_prob,
                llr_bits: llr,
                is_codeword: (!below).then_some(hit),
            });
        }

        if below {
            return Ok(DecodeOutcome::Abandoned {
                q,
                reason: AbandonReason::LlrBelowTau,
            });
        }
        if hit {
            let mut word = obs.hard().clone();
            for &r in ranks {
                word.flip(perm[r as usize - 1]);
            }
            let report = ledger.confidence_llr()?;
            return Ok(DecodeOutcome::Decoded { word, q, report });
        }
        if q >= policy.max_queries {
            return Ok(DecodeOutcome::Abandoned {
                q,
                reason: AbandonReason::QueryCapReached,
            });
        }
    }
    Ok(DecodeOutcome::Abandoned {
        q: ledger.q(),
        reason: AbandonReason::QueryCapReached,
    })
}

/// Systematic message recovery: the first `k` bits of a code-word.
pub fn extract_message(code: &LinearCode, word: &BitBlock) -> Result<BitBlock> {
    if !code.is_codeword(word)? {
        return Err(Error::NotACodeword);
    }
    Ok(word.slice(0, code.k()))
}
