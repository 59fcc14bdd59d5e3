//! Seeded Monte Carlo experiments and exhaustive verification oracles.
//!
//! Every trial draws its message and channel noise from its own ChaCha stream
//! keyed by `(master seed, Eb/N0, trial index)`, so any cell of a sweep can be
//! regenerated on its own and results do not depend on worker scheduling. All
//! policies at a point decode the same observation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::channel::{bsc_crossover, transmit, ChannelParams, SoftObservation};
use crate::codes::LinearCode;
use crate::decoder::{decode, AbandonReason, DecodeOutcome, DecodePolicy};
use crate::error::{Error, Result};
use crate::patterns::{pattern_log_probability, OrderKind, PatternGenerator, QueryOrder};
use crate::softout::{p_incorrect_cum, ConfidenceLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrialOutcome {
    Correct,
    Incorrect,
    Abandoned,
}

impl TrialOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialOutcome::Correct => "correct",
            TrialOutcome::Incorrect => "incorrect",
            TrialOutcome::Abandoned => "abandoned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub ebn0_db: f64,
    pub outcome: TrialOutcome,
    pub q: u64,
    pub llr_bits: Option<f64>,
    pub true_noise_found: bool,
    pub abandon_reason: Option<AbandonReason>,
}

/// Two-sided 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

const Z95: f64 = 1.959963984540054;
/// Below this many events (or non-events) the normal approximation is
/// replaced by the Wilson score interval.
pub const MIN_NORMAL_EVENTS: u64 = 30;

/// 95% interval for a binomial proportion `events / n`.
pub fn binomial_interval(events: u64, n: u64) -> Interval {
    if n == 0 {
        return Interval {
            lo: f64::NAN,
            hi: f64::NAN,
        };
    }
    let nf = n as f64;
    let p = events as f64 / nf;
    if events.min(n - events) >= MIN_NORMAL_EVENTS {
        let hw = Z95 * (p * (1.0 - p) / nf).sqrt();
        return Interval {
            lo: (p - hw).max(0.0),
            hi: (p + hw).min(1.0),
        };
    }
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let hw = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Interval {
        lo: if events == 0 {
            0.0
        } else {
            (centre - hw).max(0.0)
        },
        hi: if events == n {
            1.0
        } else {
            (centre + hw).min(1.0)
        },
    }
}

/// Standard error `sqrt(p (1 - p) / n)` of a binomial proportion estimate.
pub fn binomial_se(events: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let p = events as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Aggregates for one (policy, Eb/N0) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub trials: u64,
    pub correct: u64,
    pub incorrect: u64,
    pub abandoned: u64,
    pub total_queries: u64,
    /// Abandonment counts as an error.
    pub bler: f64,
    pub bler_ci: Interval,
    /// Errors among non-abandoned blocks; `None` if every block was abandoned.
    pub bler_cond: Option<f64>,
    pub bler_cond_ci: Interval,
    pub success: f64,
    pub success_cond: Option<f64>,
    pub success_cond_ci: Interval,
    pub success_cond_se: f64,
    pub abandon_frac: f64,
    pub abandon_ci: Interval,
    pub nonabandon_frac: f64,
    pub avg_queries_to_decision: f64,
    /// All queries spent divided by the number of correct decodings.
    pub avg_queries_per_success: Option<f64>,
}

impl SweepStats {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let mut correct = 0;
        let mut incorrect = 0;
        let mut abandoned = 0;
        let mut total_queries = 0u64;
        for r in records {
            match r.outcome {
                TrialOutcome::Correct => correct += 1,
                TrialOutcome::Incorrect => incorrect += 1,
                TrialOutcome::Abandoned => abandoned += 1,
            }
            total_queries += r.q;
        }
        let trials = records.len() as u64;
        let nf = trials.max(1) as f64;
        let decided = correct + incorrect;
        let frac = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
        SweepStats {
            trials,
            correct,
            incorrect,
            abandoned,
            total_queries,
            bler: (incorrect + abandoned) as f64 / nf,
            bler_ci: binomial_interval(incorrect + abandoned, trials),
            bler_cond: frac(incorrect, decided),
            bler_cond_ci: binomial_interval(incorrect, decided),
            success: correct as f64 / nf,
            success_cond: frac(correct, decided),
            success_cond_ci: binomial_interval(correct, decided),
            success_cond_se: binomial_se(correct, decided),
            abandon_frac: abandoned as f64 / nf,
            abandon_ci: binomial_interval(abandoned, trials),
            nonabandon_frac: decided as f64 / nf,
            avg_queries_to_decision: total_queries as f64 / nf,
            avg_queries_per_success: frac(total_queries, correct),
        }
    }

    pub fn nonabandoned(&self) -> u64 {
        self.correct + self.incorrect
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub trials_per_point: u64,
    pub master_seed: u64,
    /// Grow the trial count at points where a thresholded policy abandons
    /// almost everything.
    pub escalate: bool,
    /// Maximum total trials as a multiple of `trials_per_point`.
    pub escalation_cap: u64,
    /// Non-abandoned decodings wanted for conditional statistics.
    pub min_conditional_events: u64,
    /// Fail the sweep if outcomes across thresholds are inconsistent.
    pub check_monotonicity: bool,
}

impl SweepOptions {
    pub fn new(trials_per_point: u64, master_seed: u64) -> Self {
        SweepOptions {
            trials_per_point,
            master_seed,
            escalate: true,
            escalation_cap: 16,
            min_conditional_events: 100,
            check_monotonicity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub ebn0_db: f64,
    pub bsc_crossover: f64,
    /// `records[policy][trial]`.
    pub records: Vec<Vec<TrialRecord>>,
    pub stats: Vec<SweepStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub policies: Vec<DecodePolicy>,
    pub points: Vec<PointResult>,
}

/// RNG stream owned by one trial.
pub fn trial_rng(master_seed: u64, ebn0_db: f64, trial: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&ebn0_db.to_bits().to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(trial);
    rng
}

/// Message, code-word and observation for one trial.
pub fn draw_trial(
    code: &LinearCode,
    params: &ChannelParams,
    master_seed: u64,
    trial: u64,
) -> (BitBlock, SoftObservation) {
    let mut rng = trial_rng(master_seed, params.ebn0_db(), trial);
    let message = BitBlock::from_bools((0..code.k()).map(|_| rng.random::<bool>()));
    let code_word = code.encode(&message).expect("message length is k");
    let obs = transmit(&code_word, params, &mut rng);
    (code_word, obs)
}

fn classify(trial: u64, ebn0_db: f64, code_word: &BitBlock, out: &DecodeOutcome) -> TrialRecord {
    match out {
        DecodeOutcome::Decoded { word, q, report } => {
            let correct = word == code_word;
            TrialRecord {
                trial,
                ebn0_db,
                outcome: if correct {
                    TrialOutcome::Correct
                } else {
                    TrialOutcome::Incorrect
                },
                q: *q,
                llr_bits: Some(report.llr_bits),
                true_noise_found: correct,
                abandon_reason: None,
            }
        }
        DecodeOutcome::Abandoned { q, reason } => TrialRecord {
            trial,
            ebn0_db,
            outcome: TrialOutcome::Abandoned,
            q: *q,
            llr_bits: None,
            true_noise_found: false,
            abandon_reason: Some(*reason),
        },
    }
}

/// Observation handed to a policy: soft input for ORBGRAND, the BSC model
/// for hard-detection GRAND.
fn observation_for(
    order: OrderKind,
    obs: &SoftObservation,
    p_bsc: f64,
) -> Result<std::borrow::Cow<'_, SoftObservation>> {
    Ok(match order {
        OrderKind::LogisticRank => std::borrow::Cow::Borrowed(obs),
        OrderKind::Hamming => {
            std::borrow::Cow::Owned(obs.to_hard_decision(p_bsc.clamp(f64::MIN_POSITIVE, 0.5))?)
        }
    })
}

/// Checks that raising the threshold only truncates decoding.
///
/// Policies are compared pairwise within groups sharing order and query cap,
/// from lower to higher threshold (`None` lowest).
pub fn check_threshold_consistency(
    trial: u64,
    policies: &[DecodePolicy],
    outcomes: &[DecodeOutcome],
) -> Result<()> {
    let mut idx: Vec<usize> = (0..policies.len()).collect();
    idx.sort_by(|&a, &b| {
        let (pa, pb) = (&policies[a], &policies[b]);
        (pa.order as u8, pa.max_queries)
            .cmp(&(pb.order as u8, pb.max_queries))
            .then(
                pa.tau
                    .unwrap_or(f64::NEG_INFINITY)
                    .total_cmp(&pb.tau.unwrap_or(f64::NEG_INFINITY)),
            )
    });
    let violation = |detail: String| Error::MonotonicityViolation { trial, detail };
    for w in idx.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if policies[lo].order != policies[hi].order
            || policies[lo].max_queries != policies[hi].max_queries
        {
            continue;
        }
        let (a, b) = (&outcomes[lo], &outcomes[hi]);
        let (la, lb) = (policies[lo].label(), policies[hi].label());
        match (a, b) {
            (DecodeOutcome::Abandoned { .. }, DecodeOutcome::Decoded { .. }) => {
                return Err(violation(format!("{la} abandoned but {lb} decoded")));
            }
            (
                DecodeOutcome::Decoded {
                    word: wa, q: qa, ..
                },
                DecodeOutcome::Decoded {
                    word: wb, q: qb, ..
                },
            ) => {
                if wa != wb || qa != qb {
                    return Err(violation(format!("{la} and {lb} decoded differently")));
                }
            }
            _ => {
                if b.q() > a.q() {
                    return Err(violation(format!(
                        "{lb} stopped at query {} after {la} stopped at {}",
                        b.q(),
                        a.q()
                    )));
                }
            }
        }
    }
    Ok(())
}

fn run_trial(
    code: &LinearCode,
    policies: &[DecodePolicy],
    params: &ChannelParams,
    p_bsc: f64,
    master_seed: u64,
    trial: u64,
    check: bool,
) -> Result<Vec<TrialRecord>> {
    let (code_word, obs) = draw_trial(code, params, master_seed, trial);
    let outcomes = policies
        .iter()
        .map(|policy| {
            let view = observation_for(policy.order, &obs, p_bsc)?;
            decode(code, &view, policy)
        })
        .collect::<Result<Vec<_>>>()?;
    if check {
        check_threshold_consistency(trial, policies, &outcomes)?;
    }
    Ok(outcomes
        .iter()
        .map(|out| classify(trial, params.ebn0_db(), &code_word, out))
        .collect())
}

#[cfg(feature = "parallel")]
fn map_trials<T, F>(range: std::ops::Range<u64>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T, F>(range: std::ops::Range<u64>, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> Result<T>,
{
    range.map(f).collect()
}

/// Runs every policy on common trials at each Eb/N0 point.
pub fn run_sweep(
    code: &LinearCode,
    policies: &[DecodePolicy],
    ebn0_points: &[f64],
    options: &SweepOptions,
) -> Result<SweepResult> {
    if options.trials_per_point == 0 {
        return Err(Error::InvalidPolicy(
            "trials_per_point must be at least 1".into(),
        ));
    }
    for p in policies {
        p.validate()?;
    }
    let mut points = Vec::with_capacity(ebn0_points.len());
    for &ebn0_db in ebn0_points {
        points.push(run_point(code, policies, ebn0_db, options)?);
    }
    Ok(SweepResult {
        policies: policies.to_vec(),
        points,
    })
}

fn run_point(
    code: &LinearCode,
    policies: &[DecodePolicy],
    ebn0_db: f64,
    options: &SweepOptions,
) -> Result<PointResult> {
    let params = ChannelParams::new(ebn0_db, code.rate())?;
    let p_bsc = bsc_crossover(&params);
    let mut records: Vec<Vec<TrialRecord>> = vec![Vec::new(); policies.len()];
    let cap = options
        .trials_per_point
        .saturating_mul(options.escalation_cap.max(1));
    let mut done = 0u64;
    let mut batch = options.trials_per_point;
    loop {
        let rows = map_trials(done..done + batch, |t| {
            run_trial(
                code,
                policies,
                &params,
                p_bsc,
                options.master_seed,
                t,
                options.check_monotonicity,
            )
        })?;
        for row in rows {
            for (i, rec) in row.into_iter().enumerate() {
                records[i].push(rec);
            }
        }
        done += batch;
        if !options.escalate || done >= cap {
            break;
        }
        let starved = policies.iter().zip(&records).any(|(p, recs)| {
            if p.tau.is_none() {
                return false;
            }
            let s = SweepStats::from_records(recs);
            s.abandon_frac > 0.98 && s.nonabandoned() < options.min_conditional_events
        });
        if !starved {
            break;
        }
        batch = done.min(cap - done);
    }
    let stats = records
        .iter()
        .map(|r| SweepStats::from_records(r))
        .collect();
    Ok(PointResult {
        ebn0_db,
        bsc_crossover: p_bsc,
        records,
        stats,
    })
}

/// Geometric CDF `P(X <= x) = 1 - (1 - p)^x` on `x = 1, 2, ...`.
pub fn geometric_cdf(x: u64, p: f64) -> f64 {
    if x == 0 {
        return 0.0;
    }
    -(x as f64 * (-p).ln_1p()).exp_m1()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and Geometric(p) on the positive integers.
pub fn ks_distance_geometric(samples: &[u64], p: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let below = i as f64 / n;
        while i < sorted.len() && sorted[i] == x {
            i += 1;
        }
        let at = i as f64 / n;
        d = d
            .max((at - geometric_cdf(x, p)).abs())
            .max((below - geometric_cdf(x - 1, p)).abs());
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub log2_lo: f64,
    pub log2_hi: f64,
    pub count: u64,
    /// Empirical mass in the bin.
    pub frac: f64,
    /// Geometric(2^-(n-k)) mass in the bin.
    pub model_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorQueryDistribution {
    /// Query index of each incorrect decoding, in trial order.
    pub samples: Vec<u64>,
    pub trials: u64,
    pub sample_mean: f64,
    pub ks_distance: f64,
    pub model_mean: f64,
    pub histogram: Vec<HistogramBin>,
}

/// What a sample of the error-query distribution is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorQueryMeasure {
    /// Query index of trials that decode to a wrong code-word.
    IncorrectDecodings,
    /// Index of the first query that hits a code-word other than the one
    /// sent, querying past the true noise effect. Every trial contributes.
    FirstErroneousQuery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorQueryOptions {
    pub measure: ErrorQueryMeasure,
    pub order: OrderKind,
    pub max_queries: Option<u64>,
    pub batch: u64,
    /// Abort if, after `guard_after` trials, fewer than this fraction erred.
    pub min_error_rate: f64,
    pub guard_after: u64,
    pub max_trials: u64,
    pub bin_width_log2: f64,
}

impl Default for ErrorQueryOptions {
    fn default() -> Self {
        ErrorQueryOptions {
            measure: ErrorQueryMeasure::IncorrectDecodings,
            order: OrderKind::LogisticRank,
            max_queries: None,
            batch: 2_000,
            min_error_rate: 1e-4,
            guard_after: 20_000,
            max_trials: 100_000_000,
            bin_width_log2: 0.5,
        }
    }
}

/// Index of the first query landing on a code-word other than `sent`, or
/// `None` if `max_queries` pass without one.
pub fn first_erroneous_query(
    code: &LinearCode,
    obs: &SoftObservation,
    sent: &BitBlock,
    order: OrderKind,
    max_queries: u64,
) -> Result<Option<u64>> {
    let n = code.n();
    let noise = obs.hard().try_xor(sent)?;
    let order = QueryOrder::for_observation(order, obs);
    let perm = order.rank_permutation();
    let columns = code.parity_columns();
    let rank_column: Vec<u64> = std::iter::once(0)
        .chain(perm.iter().map(|&b| columns[b]))
        .collect();
    let mut noise_ranks: Vec<u32> = (1..=n as u32)
        .filter(|&r| noise.get(perm[r as usize - 1]))
        .collect();
    noise_ranks.sort_unstable();
    let target = code.syndrome(obs.hard())?;
    let mut cursor = crate::patterns::PatternCursor::new();
    let mut scratch = Vec::new();
    while cursor.emitted() < max_queries && cursor.advance(order.kind(), n) {
        let ranks = cursor.ranks();
        let syndrome = ranks.iter().fold(0u64, |s, &r| s ^ rank_column[r as usize]);
        if syndrome != target {
            continue;
        }
        scratch.clear();
        scratch.extend_from_slice(ranks);
        scratch.sort_unstable();
        if scratch != noise_ranks {
            return Ok(Some(cursor.emitted()));
        }
    }
    Ok(None)
}

/// Error-query samples collected until `target_errors` have been seen.
pub fn collect_error_query_distribution(
    code: &LinearCode,
    ebn0_db: f64,
    target_errors: usize,
    seed: u64,
    options: &ErrorQueryOptions,
) -> Result<ErrorQueryDistribution> {
    let params = ChannelParams::new(ebn0_db, code.rate())?;
    let p_bsc = bsc_crossover(&params);
    let decoded_errors = options.measure == ErrorQueryMeasure::IncorrectDecodings;
    if decoded_errors && p_bsc < options.min_error_rate {
        return Err(Error::Guard(format!(
            "hard-decision crossover {p_bsc:.3e} at {ebn0_db} dB is below {:.1e}; incorrect decodings would be too rare",
            options.min_error_rate
        )));
    }
    let max_queries = options
        .max_queries
        .unwrap_or_else(|| DecodePolicy::default_max_queries(code.redundancy()));
    let policy = DecodePolicy::new(options.order, None, max_queries)?;
    let mut samples = Vec::with_capacity(target_errors);
    let mut trials = 0u64;
    while samples.len() < target_errors {
        if trials >= options.max_trials {
            return Err(Error::Guard(format!(
                "only {} of {target_errors} incorrect decodings after {trials} trials",
                samples.len()
            )));
        }
        let batch = options.batch.max(1).min(options.max_trials - trials);
        let rows = map_trials(trials..trials + batch, |t| {
            let (code_word, obs) = draw_trial(code, &params, seed, t);
            let view = observation_for(options.order, &obs, p_bsc)?;
            if !decoded_errors {
                return first_erroneous_query(code, &view, &code_word, options.order, max_queries);
            }
            let out = decode(code, &view, &policy)?;
            Ok(match out {
                DecodeOutcome::Decoded { word, q, .. } if word != code_word => Some(q),
                _ => None,
            })
        })?;
        for q in rows {
            trials += 1;
            if let Some(q) = q {
                samples.push(q);
                if samples.len() == target_errors {
                    break;
                }
            }
        }
        if decoded_errors
            && trials >= options.guard_after
            && (samples.len() as f64) < options.min_error_rate * trials as f64
        {
            return Err(Error::Guard(format!(
                "error rate {:.2e} after {trials} trials at {ebn0_db} dB is below {:.1e}",
                samples.len() as f64 / trials as f64,
                options.min_error_rate
            )));
        }
    }
    let p_hit = (-(code.redundancy() as f64)).exp2();
    let sample_mean = samples.iter().sum::<u64>() as f64 / samples.len().max(1) as f64;
    Ok(ErrorQueryDistribution {
        ks_distance: ks_distance_geometric(&samples, p_hit),
        histogram: log2_histogram(&samples, p_hit, options.bin_width_log2),
        model_mean: 1.0 / p_hit,
        sample_mean,
        samples,
        trials,
    })
}

fn log2_histogram(samples: &[u64], p: f64, width: f64) -> Vec<HistogramBin> {
    let max = samples.iter().copied().max().unwrap_or(1);
    let bins = ((max as f64).log2() / width).floor() as usize + 1;
    let mut counts = vec![0u64; bins];
    for &q in samples {
        let b = ((q as f64).log2() / width).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let n = samples.len().max(1) as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| {
            let log2_lo = b as f64 * width;
            let log2_hi = log2_lo + width;
            // Integers x with log2_lo <= log2(x) < log2_hi.
            let first = log2_lo.exp2().ceil() as u64;
            let past = log2_hi.exp2().ceil() as u64;
            HistogramBin {
                log2_lo,
                log2_hi,
                count,
                frac: count as f64 / n,
                model_frac: geometric_cdf(past - 1, p) - geometric_cdf(first - 1, p),
            }
        })
        .collect()
}

/// Largest block length the exhaustive oracle accepts.
pub const ORACLE_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub q: u64,
    /// Ledger running sum, log domain, exponentiated.
    pub ledger_correct: f64,
    /// Direct linear-domain sum of per-pattern products.
    pub exact_correct: f64,
    /// `P(U <= q)` for the actual codebook.
    pub exact_incorrect: f64,
    /// `1 - (1 - 2^-(n-k))^q`.
    pub approx_incorrect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub max_correct_deviation: f64,
    pub max_incorrect_deviation: f64,
    pub total_probability: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Exhaustive per-query accounting for a small code.
///
/// `P(U <= q)` is evaluated by replaying the query order against every
/// possible true noise effect `N`: the queries that land on a code-word are
/// exactly the coset `N + C`, so an erroneous decoding first occurs at the
/// earliest query in `N + C` other than `N` itself.
pub fn oracle_exact_accounting(
    code: &LinearCode,
    obs: &SoftObservation,
    order: OrderKind,
) -> Result<OracleReport> {
    let n = code.n();
    if n > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge {
            n,
            max: ORACLE_MAX_N,
        });
    }
    if obs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: obs.len(),
        });
    }
    let size = 1usize << n;
    let b = obs.flip_prob();
    let direct = |mask: usize| -> f64 {
        (0..n)
            .map(|i| if mask >> i & 1 == 1 { b[i] } else { 1.0 - b[i] })
            .product()
    };

    let mut ledger = ConfidenceLedger::new(code.redundancy() as u32);
    let mut query_masks = Vec::with_capacity(size);
    let mut ledger_cum = Vec::with_capacity(size);
    for pat in PatternGenerator::new(QueryOrder::for_observation(order, obs)) {
        ledger.record_query(pattern_log_probability(&pat, obs))?;
        ledger_cum.push(ledger.cum_correct_log().exp());
        query_masks.push(pat.positions.iter().fold(0usize, |m, &i| m | 1 << i));
    }
    let mut index_of = vec![0usize; size];
    for (j, &mask) in query_masks.iter().enumerate() {
        index_of[mask] = j + 1;
    }

    let codewords: Vec<usize> = (1..1u64 << code.k())
        .map(|m| {
            let w = code
                .encode(&BitBlock::from_u64(m, code.k()))
                .expect("length k");
            w.ones().fold(0usize, |acc, i| acc | 1 << i)
        })
        .collect();
    let mut first_error_mass = vec![0.0f64; size + 1];
    for noise in 0..size {
        let u = codewords
            .iter()
            .map(|&c| index_of[noise ^ c])
            .min()
            .unwrap_or(size + 1);
        if u <= size {
            first_error_mass[u] += direct(noise);
        }
    }

    let redundancy = code.redundancy() as u32;
    let mut rows = Vec::with_capacity(size);
    let mut exact_correct = 0.0;
    let mut exact_incorrect = 0.0;
    let mut max_correct_deviation: f64 = 0.0;
    let mut max_incorrect_deviation: f64 = 0.0;
    for (j, &mask) in query_masks.iter().enumerate() {
        let q = j as u64 + 1;
        exact_correct += direct(mask);
        exact_incorrect += first_error_mass[j + 1];
        let approx_incorrect = p_incorrect_cum(redundancy, q);
        max_correct_deviation = max_correct_deviation.max((ledger_cum[j] - exact_correct).abs());
        max_incorrect_deviation =
            max_incorrect_deviation.max((exact_incorrect - approx_incorrect).abs());
        rows.push(OracleRow {
            q,
            ledger_correct: ledger_cum[j],
            exact_correct,
            exact_incorrect,
            approx_incorrect,
        });
    }
    let pass =
        max_correct_deviation < ORACLE_TOLERANCE && (exact_correct - 1.0).abs() < ORACLE_TOLERANCE;
    Ok(OracleReport {
        rows,
        max_correct_deviation,
        max_incorrect_deviation,
        total_probability: exact_correct,
        tolerance: ORACLE_TOLERANCE,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rlc_8_4_obs(seed: u64) -> (LinearCode, SoftObservation) {
        let code = LinearCode::rlc(8, 4, 1).unwrap();
        let params = ChannelParams::new(2.0, 0.5).unwrap();
        let (_, obs) = draw_trial(&code, &params, seed, 0);
        (code, obs)
    }

    #[test]
    fn oracle_passes_on_small_rlc() {
        for seed in 0..4 {
            let (code, obs) = rlc_8_4_obs(seed);
            for order in [OrderKind::Hamming, OrderKind::LogisticRank] {
                let rep = oracle_exact_accounting(&code, &obs, order).unwrap();
                assert!(rep.pass, "{rep:?}");
                assert_eq!(rep.rows.len(), 256);
                assert!((rep.total_probability - 1.0).abs() < 1e-12);
                let last = rep.rows.last().unwrap();
                // Every noise effect has some other code-word in its coset.
                assert!((last.exact_incorrect - 1.0).abs() < 1e-12);
                assert!(rep
                    .rows
                    .windows(2)
                    .all(|w| w[1].exact_incorrect >= w[0].exact_incorrect));
            }
        }
    }

    #[test]
    fn oracle_rejects_large_codes() {
        let code = LinearCode::rlc(16, 8, 1).unwrap();
        let obs = SoftObservation::from_llrs(&[1.0; 16]).unwrap();
        assert!(matches!(
            oracle_exact_accounting(&code, &obs, OrderKind::Hamming),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_incorrect_matches_bruteforce_replay() {
        let (code, obs) = rlc_8_4_obs(7);
        let rep = oracle_exact_accounting(&code, &obs, OrderKind::LogisticRank).unwrap();
        let queries: Vec<BitBlock> =
            PatternGenerator::new(QueryOrder::for_observation(OrderKind::LogisticRank, &obs))
                .map(|p| BitBlock::from_bools((0..8).map(|i| p.positions.contains(&i))))
                .collect();
        let b = obs.flip_prob();
        let mut mass = vec![0.0; 257];
        for v in 0..256u64 {
            let noise = BitBlock::from_u64(v, 8);
            let p: f64 = (0..8)
                .map(|i| if noise.get(i) { b[i] } else { 1.0 - b[i] })
                .product();
            // Transmitted word zero, received = noise; first query landing on
            // a nonzero code-word.
            let u = queries
                .iter()
                .position(|z| {
                    let w = &noise ^ z;
                    !w.is_zero() && code.is_codeword(&w).unwrap()
                })
                .unwrap();
            mass[u + 1] += p;
        }
        let mut cum = 0.0;
        for row in &rep.rows {
            cum += mass[row.q as usize];
            assert!((row.exact_incorrect - cum).abs() < 1e-12);
        }
        assert!(rep.max_incorrect_deviation.is_finite() && rep.max_incorrect_deviation < 1.0);
    }

    #[test]
    fn intervals() {
        let normal = binomial_interval(500, 1000);
        assert!((normal.half_width() - Z95 * (0.25f64 / 1000.0).sqrt()).abs() < 1e-12);
        let wilson = binomial_interval(0, 100);
        assert_eq!(wilson.lo, 0.0);
        assert!(wilson.hi > 0.03 && wilson.hi < 0.04);
        assert!(binomial_interval(0, 0).lo.is_nan());
        assert!(normal.overlaps(&binomial_interval(520, 1000)));
        assert!(!normal.overlaps(&binomial_interval(900, 1000)));
    }

    #[test]
    fn geometric_cdf_and_ks() {
        assert_eq!(geometric_cdf(0, 0.5), 0.0);
        assert!((geometric_cdf(1, 0.5) - 0.5).abs() < 1e-15);
        assert!((geometric_cdf(3, 0.5) - 0.875).abs() < 1e-15);
        // Exact quantile sample: KS distance should be tiny.
        let p: f64 = 1.0 / 64.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<u64> = (0..20_000)
            .map(|_| {
                let u: f64 = rng.random();
                ((1.0 - u).ln() / (-p).ln_1p()).ceil().max(1.0) as u64
            })
            .collect();
        assert!(ks_distance_geometric(&samples, p) < 0.015);
        assert!(ks_distance_geometric(&samples, 4.0 * p) > 0.3);
        assert!(ks_distance_geometric(&[], p).is_nan());
    }

    #[test]
    fn histogram_model_mass_sums_to_covered_cdf() {
        let samples = vec![1, 2, 3, 4, 5, 8, 100];
        let h = log2_histogram(&samples, 0.01, 0.5);
        assert_eq!(h.iter().map(|b| b.count).sum::<u64>(), 7);
        let model: f64 = h.iter().map(|b| b.model_frac).sum();
        let past = h.last().unwrap().log2_hi.exp2().ceil() as u64;
        assert!((model - geometric_cdf(past - 1, 0.01)).abs() < 1e-12);
    }

    #[test]
    fn noiseless_sweep() {
        let code = LinearCode::rlc(32, 24, 2).unwrap();
        let policies: Vec<_> = [None, Some(0.0), Some(2.0)]
            .into_iter()
            .map(|t| DecodePolicy::for_code(&code, OrderKind::LogisticRank, t))
            .collect();
        let res = run_sweep(&code, &policies, &[40.0], &SweepOptions::new(200, 1)).unwrap();
        for s in &res.points[0].stats {
            assert_eq!(s.bler, 0.0);
            assert_eq!(s.abandon_frac, 0.0);
            assert_eq!(s.avg_queries_to_decision, 1.0);
            assert_eq!(s.avg_queries_per_success, Some(1.0));
        }
    }

    #[test]
    fn sweep_is_deterministic_and_cells_regenerate() {
        let code = LinearCode::rlc(32, 24, 2).unwrap();
        let policies: Vec<_> = [None, Some(1.0)]
            .into_iter()
            .map(|t| DecodePolicy::for_code(&code, OrderKind::LogisticRank, t))
            .collect();
        let opts = SweepOptions::new(300, 77);
        let a = run_sweep(&code, &policies, &[1.0, 3.0], &opts).unwrap();
        let b = run_sweep(&code, &policies, &[1.0, 3.0], &opts).unwrap();
        assert_eq!(a, b);
        let single = run_sweep(&code, &policies[1..], &[3.0], &opts).unwrap();
        assert_eq!(single.points[0].stats[0], a.points[1].stats[1]);
    }

    #[test]
    fn stats_fields_are_consistent() {
        let code = LinearCode::rlc(32, 24, 2).unwrap();
        let policies: Vec<_> = [None, Some(1.0)]
            .into_iter()
            .map(|t| DecodePolicy::for_code(&code, OrderKind::LogisticRank, t))
            .collect();
        let mut opts = SweepOptions::new(500, 3);
        opts.escalate = false;
        let res = run_sweep(&code, &policies, &[0.0], &opts).unwrap();
        for s in &res.points[0].stats {
            assert!((s.abandon_frac + s.nonabandon_frac - 1.0).abs() < 1e-12);
            assert!((s.success + s.bler - 1.0).abs() < 1e-12);
            assert_eq!(s.trials, 500);
        }
        let thr = &res.points[0].stats[1];
        if thr.abandon_frac > 0.0 {
            assert!(thr.success_cond.unwrap() >= thr.success);
        }
    }

    #[test]
    fn escalation_grows_starved_points() {
        let code = LinearCode::rlc(32, 24, 2).unwrap();
        let policies = vec![DecodePolicy::for_code(
            &code,
            OrderKind::LogisticRank,
            Some(6.0),
        )];
        let res = run_sweep(&code, &policies, &[-2.0], &SweepOptions::new(100, 3)).unwrap();
        let s = &res.points[0].stats[0];
        assert!(s.abandon_frac > 0.98);
        assert_eq!(s.trials, 1600);
    }

    #[test]
    fn hard_grand_policy_runs() {
        let code = LinearCode::rlc(32, 24, 2).unwrap();
        let policies = vec![
            DecodePolicy::for_code(&code, OrderKind::Hamming, None),
            DecodePolicy::for_code(&code, OrderKind::Hamming, Some(0.0)),
        ];
        let res = run_sweep(&code, &policies, &[4.0], &SweepOptions::new(300, 9)).unwrap();
        let s = &res.points[0].stats;
        assert!(s[0].success > 0.5);
        assert!(s[1].abandon_frac >= s[0].abandon_frac);
    }

    #[test]
    fn consistency_checker_flags_violations() {
        let code = LinearCode::rlc(8, 4, 1).unwrap();
        let policies = vec![
            DecodePolicy::for_code(&code, OrderKind::LogisticRank, None),
            DecodePolicy::for_code(&code, OrderKind::LogisticRank, Some(1.0)),
        ];
        let decoded = DecodeOutcome::Decoded {
            word: BitBlock::zeros(8),
            q: 3,
            report: crate::softout::LlrReport {
                llr_bits: 1.0,
                p_correct_cum: 0.5,
                p_incorrect_cum: 0.25,
                q: 3,
            },
        };
        let abandoned = DecodeOutcome::Abandoned {
            q: 2,
            reason: AbandonReason::LlrBelowTau,
        };
        assert!(
            check_threshold_consistency(0, &policies, &[decoded.clone(), abandoned.clone()])
                .is_ok()
        );
        assert!(check_threshold_consistency(0, &policies, &[abandoned, decoded]).is_err());
    }

    #[test]
    fn error_distribution_guard() {
        let code = LinearCode::rlc(32, 24, 2).unwrap();
        let err =
            collect_error_query_distribution(&code, 30.0, 10, 1, &ErrorQueryOptions::default());
        assert!(matches!(err, Err(Error::Guard(_))));
    }

    #[test]
    fn first_erroneous_query_matches_brute_force() {
        let code = LinearCode::rlc(10, 5, 3).unwrap();
        let params = ChannelParams::new(1.0, code.rate()).unwrap();
        for order in [OrderKind::Hamming, OrderKind::LogisticRank] {
            for t in 0..200 {
                let (sent, obs) = draw_trial(&code, &params, 4, t);
                let noise = obs.hard().try_xor(&sent).unwrap();
                let mut expected = None;
                for (i, pat) in
                    PatternGenerator::new(QueryOrder::for_observation(order, &obs)).enumerate()
                {
                    let mut e = BitBlock::zeros(10);
                    for &p in &pat.positions {
                        e.set(p, true);
                    }
                    if e != noise && code.is_codeword(&(obs.hard() ^ &e)).unwrap() {
                        expected = Some(i as u64 + 1);
                        break;
                    }
                }
                assert_eq!(
                    first_erroneous_query(&code, &obs, &sent, order, 1 << 10).unwrap(),
                    expected
                );
                if let Some(q) = expected {
                    assert_eq!(
                        first_erroneous_query(&code, &obs, &sent, order, q - 1).unwrap(),
                        None
                    );
                }
            }
        }
    }

    #[test]
    fn first_erroneous_query_needs_no_decoding_errors() {
        // Clean channel: every trial yields a sample.
        let code = LinearCode::rlc(48, 40, 2).unwrap();
        let options = ErrorQueryOptions {
            measure: ErrorQueryMeasure::FirstErroneousQuery,
            ..ErrorQueryOptions::default()
        };
        let clean = collect_error_query_distribution(&code, 10.0, 200, 2, &options).unwrap();
        assert_eq!(clean.samples.len(), 200);
        assert_eq!(clean.trials, 200);

        // Noisy channel: geometric with parameter 2^-r.
        let dist = collect_error_query_distribution(&code, -2.0, 3000, 2, &options).unwrap();
        assert_eq!(dist.samples.len(), 3000);
        assert!(
            (dist.sample_mean / 256.0 - 1.0).abs() < 0.15,
            "{}",
            dist.sample_mean
        );
        assert!(dist.ks_distance < 0.05, "{}", dist.ks_distance);
    }
}
