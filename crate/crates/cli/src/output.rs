//! CSV and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use grand_core::harness::{ErrorQueryDistribution, OracleReport, SweepResult};
use grand_core::{CapacityMarkers, OrderKind};

use crate::error::CliError;

pub const SWEEP_COLUMNS: [&str; 22] = [
    "policy",
    "decoder",
    "tau",
    "ebn0_db",
    "bsc_crossover",
    "trials",
    "correct",
    "incorrect",
    "abandoned",
    "bler",
    "bler_hw",
    "bler_cond",
    "bler_cond_hw",
    "success",
    "success_hw",
    "success_cond",
    "success_cond_hw",
    "abandon_frac",
    "abandon_hw",
    "nonabandon_frac",
    "avg_queries_to_decision",
    "avg_queries_per_success",
];

pub const TRIAL_COLUMNS: [&str; 7] = [
    "policy",
    "ebn0_db",
    "trial",
    "q",
    "llr_bits",
    "outcome",
    "abandon_reason",
];

pub const FIG1_COLUMNS: [&str; 9] = [
    "log2_lo",
    "log2_hi",
    "count",
    "frac",
    "model_frac",
    "sample_mean",
    "model_mean",
    "ks_distance",
    "errors",
];

pub const ORACLE_COLUMNS: [&str; 6] = [
    "q",
    "ledger_correct",
    "exact_correct",
    "abs_deviation",
    "exact_incorrect",
    "approx_incorrect",
];

/// Missing values are written as `NA`.
pub const NA: &str = "NA";

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        NA.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| NA.to_string(), num)
}

pub fn decoder_name(order: OrderKind) -> &'static str {
    match order {
        OrderKind::Hamming => "grand",
        OrderKind::LogisticRank => "orbgrand",
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn csv_writer(path: &Path, comments: &[String]) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let mut file = create(path)?;
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    for line in comments {
        writeln!(file, "# {line}").map_err(io_err)?;
    }
    Ok(csv::Writer::from_writer(file))
}

fn write_rows<I>(path: &Path, comments: &[String], header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path, comments)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn marker_comments(markers: &CapacityMarkers) -> Vec<String> {
    vec![
        format!("shannon_ebn0_db={}", markers.shannon_ebn0_db),
        format!("mincap_ebn0_db={}", markers.mincap_ebn0_db),
    ]
}

pub fn write_sweep_csv(
    path: &Path,
    comments: &[String],
    result: &SweepResult,
) -> Result<(), CliError> {
    let rows = result.points.iter().flat_map(|pt| {
        result
            .policies
            .iter()
            .zip(&pt.stats)
            .map(move |(policy, s)| {
                vec![
                    policy.label(),
                    decoder_name(policy.order).to_string(),
                    policy.tau.map_or_else(|| "none".to_string(), num),
                    num(pt.ebn0_db),
                    num(pt.bsc_crossover),
                    s.trials.to_string(),
                    s.correct.to_string(),
                    s.incorrect.to_string(),
                    s.abandoned.to_string(),
                    num(s.bler),
                    num(s.bler_ci.half_width()),
                    opt(s.bler_cond),
                    s.bler_cond
                        .map_or_else(|| NA.to_string(), |_| num(s.bler_cond_ci.half_width())),
                    num(s.success),
                    num(grand_core::harness::binomial_interval(s.correct, s.trials).half_width()),
                    opt(s.success_cond),
                    s.success_cond
                        .map_or_else(|| NA.to_string(), |_| num(s.success_cond_ci.half_width())),
                    num(s.abandon_frac),
                    num(s.abandon_ci.half_width()),
                    num(s.nonabandon_frac),
                    num(s.avg_queries_to_decision),
                    opt(s.avg_queries_per_success),
                ]
            })
    });
    write_rows(path, comments, &SWEEP_COLUMNS, rows)
}

pub fn write_trials_csv(path: &Path, result: &SweepResult) -> Result<(), CliError> {
    let rows = result.points.iter().flat_map(|pt| {
        result
            .policies
            .iter()
            .zip(&pt.records)
            .flat_map(move |(policy, recs)| {
                let label = policy.label();
                recs.iter().map(move |r| {
                    vec![
                        label.clone(),
                        num(pt.ebn0_db),
                        r.trial.to_string(),
                        r.q.to_string(),
                        opt(r.llr_bits),
                        r.outcome.as_str().to_string(),
                        match r.abandon_reason {
                            None => NA.to_string(),
                            Some(grand_core::AbandonReason::LlrBelowTau) => {
                                "llr_below_tau".to_string()
                            }
                            Some(grand_core::AbandonReason::QueryCapReached) => {
                                "query_cap".to_string()
                            }
                        },
                    ]
                })
            })
    });
    write_rows(path, &[], &TRIAL_COLUMNS, rows)
}

pub fn write_fig1_csv(
    path: &Path,
    comments: &[String],
    dist: &ErrorQueryDistribution,
) -> Result<(), CliError> {
    let rows = dist.histogram.iter().map(|b| {
        vec![
            num(b.log2_lo),
            num(b.log2_hi),
            b.count.to_string(),
            num(b.frac),
            num(b.model_frac),
            num(dist.sample_mean),
            num(dist.model_mean),
            num(dist.ks_distance),
            dist.samples.len().to_string(),
        ]
    });
    write_rows(path, comments, &FIG1_COLUMNS, rows)
}

pub fn write_samples_csv(path: &Path, samples: &[u64]) -> Result<(), CliError> {
    write_rows(
        path,
        &[],
        &["q"],
        samples.iter().map(|q| vec![q.to_string()]),
    )
}

pub fn write_oracle_csv(
    path: &Path,
    comments: &[String],
    report: &OracleReport,
) -> Result<(), CliError> {
    let rows = report.rows.iter().map(|r| {
        vec![
            r.q.to_string(),
            num(r.ledger_correct),
            num(r.exact_correct),
            num((r.ledger_correct - r.exact_correct).abs()),
            num(r.exact_incorrect),
            num(r.approx_incorrect),
        ]
    });
    write_rows(path, comments, &ORACLE_COLUMNS, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(file)
        .and_then(|_| file.flush())
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}
