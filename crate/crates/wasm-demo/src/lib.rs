//! Browser bindings. Every export returns a JSON string; the page in `www/`
//! plots it on a canvas.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use grand_core::decoder::decode_traced;
use grand_core::harness::{draw_trial, run_sweep, SweepOptions};
use grand_core::{
    bsc_crossover, capacity_markers, CapacityMarkers, ChannelParams, DecodeOutcome, DecodePolicy,
    LinearCode, OrderKind,
};

/// Longest trace returned to the page.
pub const MAX_TRACE: u64 = 1 << 15;

#[derive(Debug, Serialize)]
pub struct TracePoint {
    pub q: u64,
    pub llr_bits: f64,
    pub codeword: bool,
}

#[derive(Debug, Serialize)]
pub struct Trace {
    pub points: Vec<TracePoint>,
    pub outcome: &'static str,
    pub q: u64,
    pub llr_bits: Option<f64>,
    pub tau: Option<f64>,
    pub bsc_crossover: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub policy: String,
    pub ebn0_db: f64,
    pub trials: u64,
    pub bler: f64,
    pub nonabandon_frac: f64,
    pub success_cond: Option<f64>,
    pub avg_queries_to_decision: f64,
}

#[derive(Debug, Serialize)]
pub struct Sweep {
    pub markers: CapacityMarkers,
    pub rows: Vec<SweepRow>,
}

pub fn build_code(kind: &str, n: usize, k: usize, param: u64) -> Result<LinearCode, String> {
    match kind {
        "rlc" => LinearCode::rlc(n, k, param),
        "crc" => LinearCode::crc(n, k, param),
        other => return Err(format!("unknown code kind {other:?}")),
    }
    .map_err(|e| e.to_string())
}

fn tau_from(raw: f64) -> Option<f64> {
    raw.is_finite().then_some(raw)
}

pub fn markers(n: usize, k: usize) -> Result<CapacityMarkers, String> {
    if k == 0 || k >= n {
        return Err(format!("need 0 < k < n, got n={n}, k={k}"));
    }
    capacity_markers(k as f64 / n as f64).map_err(|e| e.to_string())
}

/// Decodes one trial with ORBGRAND and records LLR(q) at every query.
pub fn llr_trace(
    code: &LinearCode,
    ebn0_db: f64,
    tau: Option<f64>,
    seed: u64,
    trial: u64,
) -> Result<Trace, String> {
    let params = ChannelParams::new(ebn0_db, code.rate()).map_err(|e| e.to_string())?;
    let cap = DecodePolicy::default_max_queries(code.redundancy()).min(MAX_TRACE);
    let policy = DecodePolicy::new(OrderKind::LogisticRank, tau, cap).map_err(|e| e.to_string())?;
    let (sent, obs) = draw_trial(code, &params, seed, trial);
    let mut points = Vec::new();
    let out = decode_traced(code, &obs, &policy, &mut |step| {
        points.push(TracePoint {
            q: step.q,
            llr_bits: step.llr_bits,
            codeword: step.is_codeword == Some(true),
        })
    })
    .map_err(|e| e.to_string())?;
    let (outcome, llr_bits) = match &out {
        DecodeOutcome::Decoded { word, report, .. } => (
            if *word == sent {
                "correct"
            } else {
                "incorrect"
            },
            Some(report.llr_bits),
        ),
        DecodeOutcome::Abandoned { .. } => ("abandoned", None),
    };
    Ok(Trace {
        points,
        outcome,
        q: out.q(),
        llr_bits,
        tau,
        bsc_crossover: bsc_crossover(&params),
    })
}

/// Runs thresholded ORBGRAND over an Eb/N0 grid.
pub fn sweep(
    code: &LinearCode,
    taus: &[Option<f64>],
    ebn0: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Sweep, String> {
    let policies: Vec<DecodePolicy> = taus
        .iter()
        .map(|&t| DecodePolicy::for_code(code, OrderKind::LogisticRank, t))
        .collect();
    let mut options = SweepOptions::new(trials, seed);
    options.escalate = false;
    let result = run_sweep(code, &policies, ebn0, &options).map_err(|e| e.to_string())?;
    let rows = result
        .points
        .iter()
        .flat_map(|p| {
            result
                .policies
                .iter()
                .zip(&p.stats)
                .map(move |(pol, s)| SweepRow {
                    policy: pol.label(),
                    ebn0_db: p.ebn0_db,
                    trials: s.trials,
                    bler: s.bler,
                    nonabandon_frac: s.nonabandon_frac,
                    success_cond: s.success_cond,
                    avg_queries_to_decision: s.avg_queries_to_decision,
                })
        })
        .collect();
    Ok(Sweep {
        markers: capacity_markers(code.rate()).map_err(|e| e.to_string())?,
        rows,
    })
}

/// Parses `"none,0,1,2"`.
pub fn parse_taus(s: &str) -> Result<Vec<Option<f64>>, String> {
    s.split(',')
        .map(str::trim)
        .map(|t| match t {
            "none" => Ok(None),
            _ => t
                .parse()
                .map(Some)
                .map_err(|_| format!("bad threshold {t:?}")),
        })
        .collect()
}

pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if step.is_nan() || step <= 0.0 || stop < start || (stop - start) / step > 200.0 {
        return Err("grid needs step > 0, stop >= start and at most 200 points".into());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    value
        .and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = capacityMarkers)]
pub fn capacity_markers_js(n: usize, k: usize) -> Result<String, JsError> {
    to_json(markers(n, k))
}

/// `tau` is NaN for no threshold.
#[wasm_bindgen(js_name = llrTrace)]
#[allow(clippy::too_many_arguments)]
pub fn llr_trace_js(
    kind: &str,
    n: usize,
    k: usize,
    param: u64,
    ebn0_db: f64,
    tau: f64,
    seed: u64,
    trial: u64,
) -> Result<String, JsError> {
    to_json(
        build_code(kind, n, k, param)
            .and_then(|c| llr_trace(&c, ebn0_db, tau_from(tau), seed, trial)),
    )
}

#[wasm_bindgen(js_name = sweep)]
#[allow(clippy::too_many_arguments)]
pub fn sweep_js(
    kind: &str,
    n: usize,
    k: usize,
    param: u64,
    taus: &str,
    start: f64,
    stop: f64,
    step: f64,
    trials: u64,
    seed: u64,
) -> Result<String, JsError> {
    to_json(build_code(kind, n, k, param).and_then(|c| {
        let taus = parse_taus(taus)?;
        let ebn0 = grid(start, stop, step)?;
        sweep(&c, &taus, &ebn0, trials, seed)
    }))
}
