//! Run configuration: flags, optional TOML file, validation.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use grand_core::harness::ErrorQueryMeasure;
use grand_core::{CodeKind, LinearCode, OrderKind};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// BLER, abandonment and complexity versus Eb/N0.
    Sweep,
    /// Query counts at incorrect decodings versus the geometric model.
    Fig1,
    /// Exhaustive accounting check on a small code.
    Oracle,
    /// Eb/N0 of the hard-detection Shannon and min-capacity markers.
    Markers,
    /// Print the parity-check matrix as hex rows.
    DumpCode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderArg {
    Grand,
    Orbgrand,
}

impl From<DecoderArg> for OrderKind {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Grand => OrderKind::Hamming,
            DecoderArg::Orbgrand => OrderKind::LogisticRank,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureArg {
    /// Query index of trials that decode to a wrong code-word.
    IncorrectDecodings,
    /// First query hitting a code-word other than the one sent, querying
    /// past the true noise effect; every trial contributes.
    FirstErroneous,
}

impl From<MeasureArg> for ErrorQueryMeasure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::IncorrectDecodings => ErrorQueryMeasure::IncorrectDecodings,
            MeasureArg::FirstErroneous => ErrorQueryMeasure::FirstErroneousQuery,
        }
    }
}

/// Values accepted on the command line and in the config file. Flags win.
#[derive(Debug, Clone, Default, Parser, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(
    name = "grand-sim",
    version,
    about = "GRAND/ORBGRAND decoding with confidence-LLR abandonment",
    arg_required_else_help = true
)]
pub struct RawConfig {
    /// TOML file with any of the keys below (snake_case).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub mode: Option<Mode>,

    /// rlc:N:K[:SEED] or crc:N:K:POLY (Koopman hex, e.g. 0xbae).
    #[arg(long)]
    pub code: Option<String>,

    #[arg(long, value_enum)]
    pub decoder: Option<DecoderArg>,

    /// Comma-separated thresholds in bits; `none` disables abandonment.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<String>,

    /// start:step:stop in dB, a comma-separated list, or a single value.
    #[arg(long, allow_hyphen_values = true)]
    pub ebn0: Option<String>,

    /// Trials per Eb/N0 point (sweep) or target sample count (fig1).
    #[arg(long)]
    pub trials: Option<u64>,

    /// Random linear code construction seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Seed for the Monte Carlo trial streams.
    #[arg(long)]
    pub master_seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Query cap per decoding; defaults to 8 * 2^(n-k).
    #[arg(long)]
    pub max_queries: Option<u64>,

    /// fig1 sample definition.
    #[arg(long, value_enum)]
    pub measure: Option<MeasureArg>,

    /// Largest trial multiplier when thresholded policies starve.
    #[arg(long)]
    pub escalation_cap: Option<u64>,

    /// Also write one CSV row per trial and policy.
    #[arg(long)]
    #[serde(default)]
    pub per_trial: bool,
}

impl RawConfig {
    fn overlay(self, flags: RawConfig) -> RawConfig {
        RawConfig {
            config: flags.config.or(self.config),
            mode: flags.mode.or(self.mode),
            code: flags.code.or(self.code),
            decoder: flags.decoder.or(self.decoder),
            tau: flags.tau.or(self.tau),
            ebn0: flags.ebn0.or(self.ebn0),
            trials: flags.trials.or(self.trials),
            seed: flags.seed.or(self.seed),
            master_seed: flags.master_seed.or(self.master_seed),
            workers: flags.workers.or(self.workers),
            out: flags.out.or(self.out),
            max_queries: flags.max_queries.or(self.max_queries),
            measure: flags.measure.or(self.measure),
            escalation_cap: flags.escalation_cap.or(self.escalation_cap),
            per_trial: flags.per_trial || self.per_trial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub kind: CodeKind,
    pub n: usize,
    pub k: usize,
    pub seed: Option<u64>,
    pub poly: Option<u64>,
}

impl CodeSpec {
    pub fn build(&self) -> Result<LinearCode, CliError> {
        Ok(match self.kind {
            CodeKind::Rlc => LinearCode::rlc(self.n, self.k, self.seed.unwrap_or(0))?,
            CodeKind::Crc => LinearCode::crc(self.n, self.k, self.poly.expect("validated"))?,
        })
    }

    pub fn descriptor(&self) -> String {
        match self.kind {
            CodeKind::Rlc => format!("rlc:{}:{}:{}", self.n, self.k, self.seed.unwrap_or(0)),
            CodeKind::Crc => format!("crc:{}:{}:{:#x}", self.n, self.k, self.poly.unwrap_or(0)),
        }
    }
}

/// Fully validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub code: CodeSpec,
    pub decoder: DecoderArg,
    pub taus: Vec<Option<f64>>,
    pub ebn0: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub max_queries: Option<u64>,
    pub measure: MeasureArg,
    pub escalation_cap: u64,
    pub per_trial: bool,
}

pub const DEFAULT_SWEEP_TRIALS: u64 = 10_000;
pub const DEFAULT_FIG1_ERRORS: u64 = 2_000;
pub const DEFAULT_FIG1_EBN0_DB: f64 = -3.0;
pub const DEFAULT_ORACLE_EBN0_DB: f64 = 2.0;

fn parse_u64(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

pub fn parse_code(s: &str) -> Result<CodeSpec, CliError> {
    let bad = |why: &str| CliError::Config(format!("invalid --code {s:?}: {why}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(bad("expected rlc:N:K[:SEED] or crc:N:K:POLY"));
    }
    let n: usize = parts[1].parse().map_err(|_| bad("N is not an integer"))?;
    let k: usize = parts[2].parse().map_err(|_| bad("K is not an integer"))?;
    let extra = parts
        .get(3)
        .map(|p| parse_u64(p).ok_or_else(|| bad("bad seed or polynomial")))
        .transpose()?;
    match parts[0].to_ascii_lowercase().as_str() {
        "rlc" => Ok(CodeSpec {
            kind: CodeKind::Rlc,
            n,
            k,
            seed: extra,
            poly: None,
        }),
        "crc" => Ok(CodeSpec {
            kind: CodeKind::Crc,
            n,
            k,
            seed: None,
            poly: Some(extra.ok_or_else(|| bad("CRC codes need a polynomial"))?),
        }),
        other => Err(bad(&format!("unknown code kind {other:?}"))),
    }
}

pub fn parse_taus(s: &str) -> Result<Vec<Option<f64>>, CliError> {
    let taus = s
        .split(',')
        .map(|t| {
            let t = t.trim();
            if t.eq_ignore_ascii_case("none") {
                return Ok(None);
            }
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(CliError::Config(format!(
                    "invalid threshold {t:?} in --tau"
                ))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(taus)
}

pub fn parse_ebn0(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("invalid --ebn0 {s:?}: {why}"));
    let num = |t: &str| -> Result<f64, CliError> {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad("not a number"))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:step:stop"));
        }
        let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step <= 0.0 {
            return Err(bad("step must be positive"));
        }
        if stop < start {
            return Err(bad("stop is below start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 10_000 {
            return Err(bad("more than 10000 points"));
        }
        // Round to the step's grid so values print cleanly.
        Ok((0..count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect())
    } else {
        s.split(',').map(num).collect()
    }
}

/// Reads a TOML config, or the `config` object of a JSON run sidecar.
fn read_file(path: &Path) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        let mut value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let inner = value
            .get_mut("config")
            .map(serde_json::Value::take)
            .unwrap_or(value);
        serde_json::from_value(inner).map_err(|e| bad(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| bad(e.to_string()))
    }
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Flag-level form of this configuration; feeding it back reproduces the run.
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            config: None,
            mode: Some(self.mode),
            code: Some(self.code.descriptor()),
            decoder: Some(self.decoder),
            tau: Some(join(&self.taus, |t| {
                t.map_or_else(|| "none".to_string(), |v| format!("{v:?}"))
            })),
            ebn0: Some(join(&self.ebn0, |v| format!("{v:?}"))),
            trials: Some(self.trials),
            seed: None,
            master_seed: Some(self.master_seed),
            workers: self.workers,
            out: Some(self.out.clone()),
            max_queries: self.max_queries,
            measure: Some(self.measure),
            escalation_cap: Some(self.escalation_cap),
            per_trial: self.per_trial,
        }
    }

    /// Merges an optional config file under the flags and validates.
    pub fn from_raw(flags: RawConfig) -> Result<RunConfig, CliError> {
        let raw = match &flags.config {
            Some(path) => read_file(path)?.overlay(flags),
            None => flags,
        };
        Self::validate(raw)
    }

    pub fn parse_from<I, T>(argv: I) -> Result<RunConfig, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let flags = RawConfig::try_parse_from(argv)?;
        Self::from_raw(flags)
    }

    fn validate(raw: RawConfig) -> Result<RunConfig, CliError> {
        let mode = raw
            .mode
            .ok_or_else(|| CliError::Config("--mode is required".into()))?;
        let code_str = raw
            .code
            .ok_or_else(|| CliError::Config("--code is required".into()))?;
        let mut code = parse_code(&code_str)?;
        if let Some(seed) = raw.seed {
            if code.kind == CodeKind::Crc {
                return Err(CliError::Config(
                    "--seed selects a random linear code; CRC codes are fixed by their polynomial"
                        .into(),
                ));
            }
            code.seed = Some(seed);
        }
        if code.kind == CodeKind::Rlc && code.seed.is_none() {
            code.seed = Some(0);
        }
        // Surface construction errors as configuration errors.
        let built = code.build()?;

        let taus = match raw.tau {
            Some(t) => parse_taus(&t)?,
            None => vec![None],
        };
        let default_ebn0 = match mode {
            Mode::Fig1 => Some(vec![DEFAULT_FIG1_EBN0_DB]),
            Mode::Oracle => Some(vec![DEFAULT_ORACLE_EBN0_DB]),
            Mode::Markers | Mode::DumpCode => Some(vec![]),
            Mode::Sweep => None,
        };
        let ebn0 = match raw.ebn0 {
            Some(s) => parse_ebn0(&s)?,
            None => default_ebn0
                .ok_or_else(|| CliError::Config("--ebn0 is required in sweep mode".into()))?,
        };
        match mode {
            Mode::Fig1 | Mode::Oracle if ebn0.len() != 1 => {
                return Err(CliError::Config(format!(
                    "{mode:?} mode takes a single --ebn0 value"
                )));
            }
            Mode::Fig1 | Mode::Oracle if taus.iter().any(Option::is_some) => {
                return Err(CliError::Config(format!(
                    "{mode:?} mode decodes without abandonment; drop --tau"
                )));
            }
            Mode::Sweep if ebn0.is_empty() => {
                return Err(CliError::Config("--ebn0 lists no points".into()));
            }
            Mode::Oracle if built.n() > grand_core::harness::ORACLE_MAX_N => {
                return Err(CliError::Config(format!(
                    "oracle mode enumerates 2^n patterns and needs n <= {}",
                    grand_core::harness::ORACLE_MAX_N
                )));
            }
            _ => {}
        }
        if let Some(0) = raw.max_queries {
            return Err(CliError::Config("--max-queries must be at least 1".into()));
        }
        if let Some(0) = raw.workers {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        let trials = raw.trials.unwrap_or(match mode {
            Mode::Fig1 => DEFAULT_FIG1_ERRORS,
            _ => DEFAULT_SWEEP_TRIALS,
        });
        if trials == 0 {
            return Err(CliError::Config("--trials must be at least 1".into()));
        }
        Ok(RunConfig {
            mode,
            code,
            decoder: raw.decoder.unwrap_or(DecoderArg::Orbgrand),
            taus,
            ebn0,
            trials,
            master_seed: raw.master_seed.unwrap_or(1),
            workers: raw.workers,
            out: raw.out.unwrap_or_else(|| PathBuf::from("out")),
            max_queries: raw.max_queries,
            measure: raw.measure.unwrap_or(MeasureArg::IncorrectDecodings),
            escalation_cap: raw.escalation_cap.unwrap_or(16).max(1),
            per_trial: raw.per_trial,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        RunConfig::parse_from(std::iter::once("grand-sim").chain(args.iter().copied()))
    }

    #[test]
    fn figure_two_experiment() {
        let cfg = parse(&[
            "--mode",
            "sweep",
            "--code",
            "rlc:128:116",
            "--tau",
            "none,0,1,2",
            "--ebn0",
            "0:0.5:8",
        ])
        .unwrap();
        assert_eq!(cfg.code.n, 128);
        assert_eq!(cfg.code.k, 116);
        assert_eq!(cfg.taus, vec![None, Some(0.0), Some(1.0), Some(2.0)]);
        assert_eq!(cfg.ebn0.len(), 17);
        assert_eq!(cfg.ebn0[16], 8.0);
        assert_eq!(cfg.ebn0[3], 1.5);
        assert_eq!(cfg.decoder, DecoderArg::Orbgrand);
        let neg = parse(&["--mode", "fig1", "--code", "rlc:64:52", "--ebn0", "-2"]).unwrap();
        assert_eq!(neg.ebn0, vec![-2.0]);
    }

    #[test]
    fn empty_argv_is_an_error() {
        let err = RunConfig::parse_from(["grand-sim"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn crc_with_seed_is_rejected() {
        let err = parse(&[
            "--mode",
            "markers",
            "--code",
            "crc:64:52:0xbae",
            "--seed",
            "3",
        ])
        .unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn code_descriptors() {
        assert_eq!(parse_code("crc:64:52:0xbae").unwrap().poly, Some(0xbae));
        assert_eq!(parse_code("rlc:8:4:9").unwrap().seed, Some(9));
        assert!(parse_code("crc:64:52").is_err());
        assert!(parse_code("ldpc:64:52").is_err());
        assert!(parse_code("rlc:x:4").is_err());
        let err = parse(&["--mode", "markers", "--code", "crc:64:51:0xbae"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn ebn0_forms() {
        assert_eq!(parse_ebn0("1.5").unwrap(), vec![1.5]);
        assert_eq!(parse_ebn0("1,2, 4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(parse_ebn0("0:0.1:0.3").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert!(parse_ebn0("0:0:1").is_err());
        assert!(parse_ebn0("2:1:1").is_err());
        assert!(parse_ebn0("a").is_err());
    }

    #[test]
    fn tau_forms() {
        assert_eq!(parse_taus("none, 1.5").unwrap(), vec![None, Some(1.5)]);
        assert!(parse_taus("inf").is_err());
        assert!(parse_taus("x").is_err());
    }

    #[test]
    fn mode_specific_rules() {
        assert!(parse(&["--mode", "sweep", "--code", "rlc:8:4"]).is_err());
        assert!(parse(&["--mode", "oracle", "--code", "rlc:64:52"]).is_err());
        assert!(parse(&["--mode", "fig1", "--code", "rlc:64:52", "--ebn0", "1,2"]).is_err());
        let fig1 = parse(&["--mode", "fig1", "--code", "crc:64:52:0xbae"]).unwrap();
        assert_eq!(fig1.ebn0, vec![DEFAULT_FIG1_EBN0_DB]);
        assert_eq!(fig1.trials, DEFAULT_FIG1_ERRORS);
    }

    #[test]
    fn file_values_are_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "mode = \"sweep\"\ncode = \"rlc:64:52:4\"\ntau = \"none,1\"\nebn0 = \"1:1:3\"\ntrials = 50\n",
        )
        .unwrap();
        let cfg = parse(&["--config", path.to_str().unwrap(), "--trials", "70"]).unwrap();
        assert_eq!(cfg.trials, 70);
        assert_eq!(cfg.code.seed, Some(4));
        assert_eq!(cfg.ebn0, vec![1.0, 2.0, 3.0]);

        let round = RunConfig::validate(cfg.to_raw()).unwrap();
        assert_eq!(round, cfg);

        std::fs::write(&path, "mode = \"sweep\"\nbogus = 1\n").unwrap();
        let err = parse(&["--config", path.to_str().unwrap()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
