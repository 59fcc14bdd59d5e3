//! Mode dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use grand_core::harness::{
    collect_error_query_distribution, draw_trial, oracle_exact_accounting, run_sweep,
    ErrorQueryDistribution, ErrorQueryOptions, OracleReport, SweepOptions, SweepResult,
};
use grand_core::{
    bsc_crossover, capacity_markers, CapacityMarkers, ChannelParams, DecodePolicy, LinearCode,
    OrderKind,
};

use crate::config::{Mode, RawConfig, RunConfig};
use crate::error::CliError;
use crate::output;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a run produced, for callers that want more than the files.
#[derive(Debug)]
pub enum RunReport {
    Sweep {
        result: SweepResult,
        markers: CapacityMarkers,
        files: Vec<PathBuf>,
    },
    Fig1 {
        distribution: ErrorQueryDistribution,
        files: Vec<PathBuf>,
    },
    Oracle {
        report: OracleReport,
        files: Vec<PathBuf>,
    },
    Markers(CapacityMarkers),
    DumpCode(Vec<String>),
}

#[derive(Serialize)]
struct Sidecar<T: Serialize> {
    version: &'static str,
    /// Flag-level config; `--config <this file>` reruns it.
    config: RawConfig,
    code: String,
    n: usize,
    k: usize,
    rate: f64,
    markers: CapacityMarkers,
    code_seed: Option<u64>,
    master_seed: u64,
    summary: T,
}

#[derive(Serialize)]
struct SweepSummary {
    policies: Vec<String>,
    /// Trials actually run at each point after escalation.
    trials_per_point: Vec<(f64, u64)>,
}

#[derive(Serialize)]
struct Fig1Summary {
    errors: usize,
    trials: u64,
    sample_mean: f64,
    model_mean: f64,
    ks_distance: f64,
}

#[derive(Serialize)]
struct OracleSummary {
    pass: bool,
    tolerance: f64,
    max_correct_deviation: f64,
    max_incorrect_deviation: f64,
    total_probability: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn stdout_err(source: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

/// Runs the configured mode, writing files under `config.out` and a short
/// report to `stdout`.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<RunReport, CliError> {
    match config.workers {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Pool(e.to_string()))?;
            let mut buffer = Vec::new();
            let result = pool.install(|| run_mode(config, &mut buffer));
            stdout.write_all(&buffer).map_err(stdout_err)?;
            result
        }
        None => run_mode(config, stdout),
    }
}

fn run_mode(config: &RunConfig, stdout: &mut dyn Write) -> Result<RunReport, CliError> {
    let code = config.code.build()?;
    let markers = capacity_markers(code.rate())?;
    match config.mode {
        Mode::Markers => {
            writeln!(
                stdout,
                "code={} rate={}",
                config.code.descriptor(),
                code.rate()
            )
            .map_err(stdout_err)?;
            for line in output::marker_comments(&markers) {
                writeln!(stdout, "{line}").map_err(stdout_err)?;
            }
            Ok(RunReport::Markers(markers))
        }
        Mode::DumpCode => {
            let rows = code.parity_check_hex();
            writeln!(
                stdout,
                "# {} parity-check rows, {} columns",
                rows.len(),
                code.n()
            )
            .map_err(stdout_err)?;
            for row in &rows {
                writeln!(stdout, "{row}").map_err(stdout_err)?;
            }
            Ok(RunReport::DumpCode(rows))
        }
        Mode::Sweep => run_sweep_mode(config, &code, markers, stdout),
        Mode::Fig1 => run_fig1_mode(config, &code, markers, stdout),
        Mode::Oracle => run_oracle_mode(config, &code, markers, stdout),
    }
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn sidecar<T: Serialize>(
    config: &RunConfig,
    code: &LinearCode,
    markers: CapacityMarkers,
    summary: T,
) -> Sidecar<T> {
    Sidecar {
        version: VERSION,
        config: config.to_raw(),
        code: config.code.descriptor(),
        n: code.n(),
        k: code.k(),
        rate: code.rate(),
        markers,
        code_seed: code.seed(),
        master_seed: config.master_seed,
        summary,
    }
}

fn header_comments(
    config: &RunConfig,
    code: &LinearCode,
    markers: &CapacityMarkers,
) -> Vec<String> {
    let mut lines = vec![
        format!("grand-sim {VERSION}"),
        format!("code={} rate={}", config.code.descriptor(), code.rate()),
        format!("master_seed={}", config.master_seed),
    ];
    lines.extend(output::marker_comments(markers));
    lines
}

fn policies(config: &RunConfig, code: &LinearCode) -> Result<Vec<DecodePolicy>, CliError> {
    let order = OrderKind::from(config.decoder);
    let cap = config
        .max_queries
        .unwrap_or_else(|| DecodePolicy::default_max_queries(code.redundancy()));
    config
        .taus
        .iter()
        .map(|&tau| DecodePolicy::new(order, tau, cap).map_err(CliError::from))
        .collect()
}

fn run_sweep_mode(
    config: &RunConfig,
    code: &LinearCode,
    markers: CapacityMarkers,
    stdout: &mut dyn Write,
) -> Result<RunReport, CliError> {
    let policies = policies(config, code)?;
    prepare_out(&config.out)?;
    let mut options = SweepOptions::new(config.trials, config.master_seed);
    options.escalation_cap = config.escalation_cap;
    let result = run_sweep(code, &policies, &config.ebn0, &options)?;

    let csv_path = config.out.join("sweep.csv");
    output::write_sweep_csv(&csv_path, &header_comments(config, code, &markers), &result)?;
    let mut files = vec![csv_path];
    if config.per_trial {
        let trials_path = config.out.join("trials.csv");
        output::write_trials_csv(&trials_path, &result)?;
        files.push(trials_path);
    }
    let summary = SweepSummary {
        policies: policies.iter().map(DecodePolicy::label).collect(),
        trials_per_point: result
            .points
            .iter()
            .map(|p| (p.ebn0_db, p.stats.first().map_or(0, |s| s.trials)))
            .collect(),
    };
    let json_path = config.out.join("sweep.json");
    output::write_json(&json_path, &sidecar(config, code, markers, summary))?;
    files.push(json_path);

    writeln!(
        stdout,
        "sweep: {} points x {} policies written to {}",
        result.points.len(),
        policies.len(),
        files[0].display()
    )
    .map_err(stdout_err)?;
    Ok(RunReport::Sweep {
        result,
        markers,
        files,
    })
}

fn run_fig1_mode(
    config: &RunConfig,
    code: &LinearCode,
    markers: CapacityMarkers,
    stdout: &mut dyn Write,
) -> Result<RunReport, CliError> {
    prepare_out(&config.out)?;
    let options = ErrorQueryOptions {
        measure: config.measure.into(),
        order: config.decoder.into(),
        max_queries: config.max_queries,
        ..ErrorQueryOptions::default()
    };
    let ebn0 = config.ebn0[0];
    let target = usize::try_from(config.trials)
        .map_err(|_| CliError::Config("--trials too large".into()))?;
    let dist = collect_error_query_distribution(code, ebn0, target, config.master_seed, &options)?;

    let mut comments = header_comments(config, code, &markers);
    comments.push(format!("ebn0_db={ebn0}"));
    comments.push(format!(
        "measure={}",
        config
            .measure
            .to_possible_value()
            .expect("no skipped variants")
            .get_name()
    ));
    let csv_path = config.out.join("fig1.csv");
    output::write_fig1_csv(&csv_path, &comments, &dist)?;
    let mut files = vec![csv_path];
    if config.per_trial {
        let samples_path = config.out.join("fig1_samples.csv");
        output::write_samples_csv(&samples_path, &dist.samples)?;
        files.push(samples_path);
    }
    let summary = Fig1Summary {
        errors: dist.samples.len(),
        trials: dist.trials,
        sample_mean: dist.sample_mean,
        model_mean: dist.model_mean,
        ks_distance: dist.ks_distance,
    };
    let json_path = config.out.join("fig1.json");
    output::write_json(&json_path, &sidecar(config, code, markers, summary))?;
    files.push(json_path);

    writeln!(
        stdout,
        "fig1: {} samples in {} trials, mean queries {:.1} (model {}), KS {:.4}",
        dist.samples.len(),
        dist.trials,
        dist.sample_mean,
        dist.model_mean,
        dist.ks_distance
    )
    .map_err(stdout_err)?;
    Ok(RunReport::Fig1 {
        distribution: dist,
        files,
    })
}

fn run_oracle_mode(
    config: &RunConfig,
    code: &LinearCode,
    markers: CapacityMarkers,
    stdout: &mut dyn Write,
) -> Result<RunReport, CliError> {
    prepare_out(&config.out)?;
    let order = OrderKind::from(config.decoder);
    let params = ChannelParams::new(config.ebn0[0], code.rate())?;
    let (_, obs) = draw_trial(code, &params, config.master_seed, 0);
    let obs = match order {
        OrderKind::LogisticRank => obs,
        OrderKind::Hamming => obs.to_hard_decision(bsc_crossover(&params))?,
    };
    let report = oracle_exact_accounting(code, &obs, order)?;

    let mut comments = header_comments(config, code, &markers);
    comments.push(format!("ebn0_db={}", config.ebn0[0]));
    let csv_path = config.out.join("oracle.csv");
    output::write_oracle_csv(&csv_path, &comments, &report)?;
    let summary = OracleSummary {
        pass: report.pass,
        tolerance: report.tolerance,
        max_correct_deviation: report.max_correct_deviation,
        max_incorrect_deviation: report.max_incorrect_deviation,
        total_probability: report.total_probability,
    };
    let json_path = config.out.join("oracle.json");
    output::write_json(&json_path, &sidecar(config, code, markers, summary))?;

    let verdict = if report.pass { "PASS" } else { "FAIL" };
    let line = format!(
        "{verdict} oracle: {} queries, max deviation {:.3e} (tolerance {:.0e}), total probability {}",
        report.rows.len(),
        report.max_correct_deviation,
        report.tolerance,
        report.total_probability
    );
    writeln!(stdout, "{line}").map_err(stdout_err)?;
    if !report.pass {
        return Err(CliError::OracleFailed(line));
    }
    Ok(RunReport::Oracle {
        report,
        files: vec![csv_path, json_path],
    })
}
