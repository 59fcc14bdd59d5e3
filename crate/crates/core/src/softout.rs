//! Online decoding-confidence accounting.
//!
//! The ledger keeps a log-domain running sum of the probabilities of the noise
//! effects queried so far, `P(G <= q)`. The competing hypothesis, that some
//! erroneous code-word is hit within `q` queries, is approximated by treating
//! every query as an independent hit with probability `2^-(n-k)`:
//! `P(U <= q) ~ 1 - (1 - 2^-(n-k))^q`. Their base-2 log ratio is the
//! confidence LLR; `llr_bits = t` means a `2^t : 1` chance that a decoding
//! found by query `q` is correct.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-query probability model for hitting an erroneous code-word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IncorrectModel {
    /// `2^-(n-k)` per query.
    Geometric,
    /// `2^k / (2^n - 1)` per query; needs the block length.
    RandomCodebook { n: u32 },
}

impl IncorrectModel {
    /// `ln(1 - p)` for the per-query hit probability `p`.
    fn log_miss(self, redundancy: u32) -> f64 {
        let p = match self {
            IncorrectModel::Geometric => (-(redundancy as f64)).exp2(),
            IncorrectModel::RandomCodebook { n } => {
                // 2^k / (2^n - 1) = 2^-(n-k) / (1 - 2^-n)
                (-(redundancy as f64)).exp2() / -(-(n as f64) * LN_2).exp_m1()
            }
        };
        (-p).ln_1p()
    }
}

/// `ln(1 - e^x)` for `x < 0`.
#[inline]
pub(crate) fn log1m_exp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln P(U <= q)`.
pub fn log_p_incorrect_cum(redundancy: u32, q: u64, model: IncorrectModel) -> f64 {
    if q == 0 {
        return f64::NEG_INFINITY;
    }
    log1m_exp(q as f64 * model.log_miss(redundancy))
}

/// `1 - (1 - 2^-redundancy)^q`, accurate in relative terms for small `q`.
pub fn p_incorrect_cum(redundancy: u32, q: u64) -> f64 {
    if q == 0 {
        return 0.0;
    }
    -(q as f64 * IncorrectModel::Geometric.log_miss(redundancy)).exp_m1()
}

/// Running accounting for one decoding attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceLedger {
    q: u64,
    cum_correct_log: f64,
    redundancy: u32,
    last_pattern_log: f64,
    model: IncorrectModel,
    log_miss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrReport {
    pub llr_bits: f64,
    pub p_correct_cum: f64,
    pub p_incorrect_cum: f64,
    pub q: u64,
}

/// Log-odds that the next query is a correct versus an erroneous decoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLlr {
    pub bits: f64,
    /// Set when `P(G > q)` is zero and `bits` is pinned at `+inf`.
    pub saturated: bool,
}

impl ConfidenceLedger {
    pub fn new(redundancy: u32) -> Self {
        Self::with_model(redundancy, IncorrectModel::Geometric)
    }

    pub fn with_model(redundancy: u32, model: IncorrectModel) -> Self {
        assert!(redundancy >= 1, "redundancy must be at least one bit");
        ConfidenceLedger {
            q: 0,
            cum_correct_log: f64::NEG_INFINITY,
            redundancy,
            last_pattern_log: f64::NEG_INFINITY,
            model,
            log_miss: model.log_miss(redundancy),
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn redundancy(&self) -> u32 {
        self.redundancy
    }

    /// `ln P(G <= q)`.
    pub fn cum_correct_log(&self) -> f64 {
        self.cum_correct_log
    }

    pub fn last_pattern_log(&self) -> f64 {
        self.last_pattern_log
    }

    /// Adds the next query's noise-effect log-probability to the running sum.
    pub fn record_query(&mut self, pattern_log_prob: f64) -> Result<()> {
        if pattern_log_prob.is_nan() || pattern_log_prob > 0.0 {
            return Err(Error::PositiveLogProbability(pattern_log_prob));
        }
        self.record_unchecked(pattern_log_prob);
        Ok(())
    }

    #[inline]
    pub(crate) fn record_unchecked(&mut self, pattern_log_prob: f64) {
        self.q += 1;
        self.cum_correct_log = log_add_exp(self.cum_correct_log, pattern_log_prob).min(0.0);
        self.last_pattern_log = pattern_log_prob;
    }

    /// `ln P(U <= q)` under the ledger's model.
    #[inline]
    pub fn log_p_incorrect(&self) -> f64 {
        if self.q == 0 {
            return f64::NEG_INFINITY;
        }
        log1m_exp(self.q as f64 * self.log_miss)
    }

    #[inline]
    pub(crate) fn llr_bits_unchecked(&self) -> f64 {
        (self.cum_correct_log - self.log_p_incorrect()) / LN_2
    }

    pub fn confidence_llr(&self) -> Result<LlrReport> {
        if self.q == 0 {
            return Err(Error::NoQueries);
        }
        let log_incorrect = self.log_p_incorrect();
        Ok(LlrReport {
            llr_bits: (self.cum_correct_log - log_incorrect) / LN_2,
            p_correct_cum: self.cum_correct_log.exp(),
            p_incorrect_cum: log_incorrect.exp(),
            q: self.q,
        })
    }

    /// `log2 [P(G=q) P(U>q)] / [P(U=q) P(G>q)]`. Reported only; the decoder
    /// never abandons on it.
    pub fn conditional_llr(&self) -> Result<ConditionalLlr> {
        if self.q == 0 {
            return Err(Error::NoQueries);
        }
        let log_g_gt = log1m_exp(self.cum_correct_log);
        if !log_g_gt.is_finite() {
            return Ok(ConditionalLlr {
                bits: f64::INFINITY,
                saturated: true,
            });
        }
        let q = self.q as f64;
        let log_u_gt = q * self.log_miss;
        let log_hit = log1m_exp(self.log_miss);
        let log_u_eq = (q - 1.0) * self.log_miss + log_hit;
        let bits = (self.last_pattern_log + log_u_gt - log_u_eq - log_g_gt) / LN_2;
        Ok(ConditionalLlr {
            bits,
            saturated: false,
        })
    }

    pub fn model(&self) -> IncorrectModel {
        self.model
    }
}
