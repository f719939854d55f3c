//! Bound diagnostics: the error-term trajectory of a live run, and the
//! closed-form behavior of the error term as the window and the confidence
//! level vary.

use fovcache::harness::{run_single, BaselineKind, ExperimentConfig};
use fovcache::metrics::pac_error_term;

fn main() -> fovcache::Result<()> {
    // Closed-form: uniform temporal weights, every estimate zero.
    println!("error term vs window length (delta = 0.1, unit bound):");
    for tau in [1usize, 2, 4, 8, 16, 32] {
        let sigma = vec![1.0 / tau as f64; tau];
        let e = pac_error_term(&sigma, tau, 0.1, 1.0, 0.0, 0.0, 0.0, 0.0)?;
        println!("  tau {tau:>3}: {e:.5}");
    }
    println!("error term vs confidence (tau = 8):");
    for delta in [0.01, 0.05, 0.1, 0.5] {
        let sigma = vec![0.125; 8];
        let e = pac_error_term(&sigma, 8, delta, 1.0, 0.0, 0.0, 0.0, 0.0)?;
        println!("  delta {delta:>5}: {e:.5}");
    }

    // Live trajectory from a short run.
    let mut cfg = ExperimentConfig::default_synthetic();
    cfg.optimizer.horizon = 600;
    let run = run_single(&cfg, BaselineKind::Dpfl, 1)?;
    println!("per-slot error term of a live run (BS 0, every 100 slots):");
    for r in run.records.iter().filter(|r| r.bs == 0 && r.slot % 100 == 99) {
        println!(
            "  slot {:>4}: error term {:>9.3}, regret {:>8.3}, hit {:>7.3}",
            r.slot, r.pac_error, r.regret, r.cache_hit
        );
    }
    Ok(())
}
