//! BPSK over complex AWGN and the matching hard-detection BSC.
//!
//! Symbols carry unit energy and sit on the in-phase axis, so each bit sees a
//! single real Gaussian noise sample with variance
//! `sigma2 = 1 / (2 * rate * Eb/N0)`. Reliabilities are natural-log LLR
//! magnitudes.

use std::f64::consts::{LN_2, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    ebn0_db: f64,
    rate: f64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !ebn0_db.is_finite() {
            return Err(Error::InvalidChannel(format!(
                "Eb/N0 must be finite, got {ebn0_db}"
            )));
        }
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidChannel(format!(
                "rate must lie in (0, 1], got {rate}"
            )));
        }
        Ok(ChannelParams { ebn0_db, rate })
    }

    pub fn ebn0_db(&self) -> f64 {
        self.ebn0_db
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Noise variance per real dimension.
    pub fn sigma2(&self) -> f64 {
        1.0 / (2.0 * self.rate * db_to_linear(self.ebn0_db))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Bit flip probability for a reliability `l`: `e^-l / (1 + e^-l)`.
///
/// Evaluated through `e^-l`, so large reliabilities cannot overflow. The
/// result is clamped to the smallest normal `f64` rather than reaching zero.
pub fn flip_probability(l: f64) -> Result<f64> {
    if l.is_nan() || l < 0.0 {
        return Err(Error::NegativeReliability(l));
    }
    let e = (-l).exp();
    Ok((e / (1.0 + e)).max(f64::MIN_POSITIVE))
}

/// `ln(1 - B)` for reliability `l`, i.e. `-ln(1 + e^-l)`.
#[inline]
pub(crate) fn log_no_flip(l: f64) -> f64 {
    -(-l).exp().ln_1p()
}

/// Per-bit soft information for one received block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftObservation {
    hard: BitBlock,
    reliab: Vec<f64>,
    flip_prob: Vec<f64>,
    /// Bit indices in ascending reliability order, ties by index.
    by_reliability: Vec<usize>,
}

impl SoftObservation {
    /// From channel LLRs with the convention that positive favours bit 0.
    pub fn from_llrs(llrs: &[f64]) -> Result<Self> {
        let hard = BitBlock::from_bools(llrs.iter().map(|&l| l < 0.0));
        let reliab: Vec<f64> = llrs.iter().map(|l| l.abs()).collect();
        Self::from_parts(hard, reliab)
    }

    /// Hard decisions with reliabilities supplied separately.
    pub fn from_parts(hard: BitBlock, reliab: Vec<f64>) -> Result<Self> {
        if hard.len() != reliab.len() {
            return Err(Error::LengthMismatch {
                expected: hard.len(),
                actual: reliab.len(),
            });
        }
        let flip_prob = reliab
            .iter()
            .map(|&l| flip_probability(l))
            .collect::<Result<Vec<_>>>()?;
        let mut by_reliability: Vec<usize> = (0..reliab.len()).collect();
        by_reliability.sort_by(|&a, &b| reliab[a].total_cmp(&reliab[b]));
        Ok(SoftObservation {
            hard,
            reliab,
            flip_prob,
            by_reliability,
        })
    }

    /// A BSC observation: every bit flipped with the same probability `p`.
    pub fn hard_decision(hard: BitBlock, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 0.5) {
            return Err(Error::InvalidChannel(format!(
                "BSC crossover must lie in (0, 0.5], got {p}"
            )));
        }
        let l = ((1.0 - p) / p).ln();
        let n = hard.len();
        Self::from_parts(hard, vec![l; n])
    }

    /// Same hard decisions, soft information replaced by a BSC(p) model.
    pub fn to_hard_decision(&self, p: f64) -> Result<Self> {
        Self::hard_decision(self.hard.clone(), p)
    }

    pub fn len(&self) -> usize {
        self.hard.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hard.is_empty()
    }

    pub fn hard(&self) -> &BitBlock {
        &self.hard
    }

    pub fn reliab(&self) -> &[f64] {
        &self.reliab
    }

    pub fn flip_prob(&self) -> &[f64] {
        &self.flip_prob
    }

    pub fn by_reliability(&self) -> &[usize] {
        &self.by_reliability
    }

    /// `sum_i ln(1 - B_i)`, the log-probability of the all-zero noise effect.
    pub fn log_no_flip_total(&self) -> f64 {
        self.reliab.iter().map(|&l| log_no_flip(l)).sum()
    }
}

/// Modulates `code_word`, adds Gaussian noise and demodulates.
pub fn transmit<R: Rng + ?Sized>(
    code_word: &BitBlock,
    params: &ChannelParams,
    rng: &mut R,
) -> SoftObservation {
    let sigma2 = params.sigma2();
    let sigma = sigma2.sqrt();
    let llrs: Vec<f64> = code_word
        .iter()
        .map(|b| {
            let s = if b { -1.0 } else { 1.0 };
            let g: f64 = rng.sample(StandardNormal);
            2.0 * (s + sigma * g) / sigma2
        })
        .collect();
    SoftObservation::from_llrs(&llrs).expect("finite channel LLRs")
}

/// Hard-decision bit error probability `Q(sqrt(2 * rate * Eb/N0))`.
pub fn bsc_crossover(params: &ChannelParams) -> f64 {
    q_function((2.0 * params.rate * db_to_linear(params.ebn0_db)).sqrt())
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Min-entropy of a Bernoulli(p) with `p <= 1/2`, in bits.
pub fn bernoulli_min_entropy(p: f64) -> f64 {
    -(-p).ln_1p() / LN_2
}

/// Eb/N0 values (dB) where the hard-detection BSC's Shannon capacity and
/// min-capacity equal the code rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityMarkers {
    pub shannon_ebn0_db: f64,
    pub mincap_ebn0_db: f64,
}

const MARKER_LO_DB: f64 = -30.0;
const MARKER_HI_DB: f64 = 40.0;
const MARKER_TOL_DB: f64 = 1e-6;

fn bisect_increasing(mut f: impl FnMut(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (MARKER_LO_DB, MARKER_HI_DB);
    while hi - lo > MARKER_TOL_DB {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn capacity_markers(rate: f64) -> Result<CapacityMarkers> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidChannel(format!(
            "rate must lie in (0, 1), got {rate}"
        )));
    }
    let p_at = |db: f64| {
        let params = ChannelParams { ebn0_db: db, rate };
        bsc_crossover(&params)
    };
    let shannon_ebn0_db = bisect_increasing(|db| 1.0 - binary_entropy(p_at(db)) - rate);
    let mincap_ebn0_db = bisect_increasing(|db| 1.0 - bernoulli_min_entropy(p_at(db)) - rate);
    Ok(CapacityMarkers {
        shannon_ebn0_db,
        mincap_ebn0_db,
    })
}
