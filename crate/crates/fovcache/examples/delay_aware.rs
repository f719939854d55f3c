//! Delay-aware rounds against the unconstrained variant on identical seeds:
//! multicast grouping plus the per-slot latency halfspace in the regret step.

use fovcache::harness::{run_single, BaselineKind, ExperimentConfig};

fn main() -> fovcache::Result<()> {
    let mut cfg = ExperimentConfig::default_synthetic();
    cfg.optimizer.horizon = 1500;
    // Tighter per-pair latency requirement so the constraint actually bites.
    cfg.channel.delay.threshold = 0.055;

    for seed in [1, 2, 3] {
        let plain = run_single(&cfg, BaselineKind::Dpfl, seed)?;
        let delay_aware = run_single(&cfg, BaselineKind::DpflDelay, seed)?;
        let infeasible = delay_aware.records.iter().filter(|r| r.infeasible).count();
        println!(
            "seed {seed}: hit {:.2} -> {:.2}, delay {:.5} -> {:.5} s, infeasible slots {}",
            plain.avg_cache_hit,
            delay_aware.avg_cache_hit,
            plain.avg_delay,
            delay_aware.avg_delay,
            infeasible
        );
    }
    Ok(())
}
