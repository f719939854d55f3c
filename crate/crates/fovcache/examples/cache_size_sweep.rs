//! Cache-budget sweep: average cache hit and delay per baseline at each
//! budget, written as plot-ready CSVs (`fig3_hit_vs_cache.csv`,
//! `fig4_delay_vs_cache.csv`).

use fovcache::harness::{
    mean_by_axis, report, sweep, BaselineKind, ExperimentConfig, ReportInputs, SweepAxis,
};
use std::path::Path;

fn main() -> fovcache::Result<()> {
    let mut cfg = ExperimentConfig::default_synthetic();
    cfg.baselines = vec![
        BaselineKind::Dpfl,
        BaselineKind::DpflDelay,
        BaselineKind::FixedBsHalf,
        BaselineKind::FixedTemporalHalf,
    ];
    cfg.seeds = vec![1, 2, 3];
    cfg.optimizer.horizon = 1000;

    let rows = sweep(&cfg, SweepAxis::CacheSize)?;
    println!("{:<12}{:<26}{:>12}{:>14}", "cache", "baseline", "hit", "delay (s)");
    for (budget, baseline, hit, _) in mean_by_axis(&rows, false) {
        let delay = mean_by_axis(&rows, true)
            .into_iter()
            .find(|(b, k, _, _)| *b == budget && *k == baseline)
            .map(|(_, _, d, _)| d)
            .unwrap();
        println!("{:<12}{:<26}{:>12.3}{:>14.5}", budget, baseline.to_string(), hit, delay);
    }

    let out = Path::new("out/cache_sweep");
    let written = report(
        &ReportInputs { cache_sweep: Some(rows), ..ReportInputs::default() },
        out,
    )?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
