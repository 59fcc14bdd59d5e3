//! Thresholded ORBGRAND on the [128,116] random linear code at the two
//! capacity-relative operating points.
//!
//! cargo run --release -p grand-core --example eavesdropper [trials]

use grand_core::harness::{run_sweep, SweepOptions};
use grand_core::{capacity_markers, DecodePolicy, LinearCode, OrderKind};

fn main() -> grand_core::Result<()> {
    let trials = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);
    let code = LinearCode::rlc(128, 116, 1)?;
    let markers = capacity_markers(code.rate())?;
    println!(
        "rate {:.4}: Shannon marker {:.3} dB, min-capacity marker {:.3} dB",
        code.rate(),
        markers.shannon_ebn0_db,
        markers.mincap_ebn0_db
    );

    let policies: Vec<DecodePolicy> = [0.0, 1.0, 2.0]
        .into_iter()
        .map(|tau| DecodePolicy::for_code(&code, OrderKind::LogisticRank, Some(tau)))
        .collect();
    let points = [markers.shannon_ebn0_db - 3.0, markers.mincap_ebn0_db];
    let result = run_sweep(&code, &policies, &points, &SweepOptions::new(trials, 1))?;

    println!(
        "{:>8} {:>18} {:>8} {:>12} {:>14}",
        "Eb/N0", "policy", "trials", "decoded", "correct|decoded"
    );
    for point in &result.points {
        for (policy, s) in result.policies.iter().zip(&point.stats) {
            let cond = s
                .success_cond
                .map_or("-".to_string(), |p| format!("{p:.3}"));
            println!(
                "{:>8.3} {:>18} {:>8} {:>12.4} {:>14}",
                point.ebn0_db,
                policy.label(),
                s.trials,
                s.nonabandon_frac,
                cond
            );
        }
    }
    Ok(())
}
