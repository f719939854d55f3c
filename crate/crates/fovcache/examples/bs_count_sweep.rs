//! Network-size sweep: how average cache hit and delay scale with the number
//! of base stations serving a fixed user population.

use fovcache::harness::{mean_by_axis, report, sweep, BaselineKind, ExperimentConfig, ReportInputs, SweepAxis};
use std::path::Path;

fn main() -> fovcache::Result<()> {
    let mut cfg = ExperimentConfig::default_synthetic();
    cfg.baselines = vec![BaselineKind::Dpfl, BaselineKind::Sgd, BaselineKind::FedAvg];
    cfg.seeds = vec![1, 2, 3];
    cfg.n_users = 12;
    cfg.optimizer.horizon = 800;
    cfg.sweep.bs_counts = vec![2, 3, 4, 6];

    let rows = sweep(&cfg, SweepAxis::BsCount)?;
    println!("{:<10}{:<14}{:>12}{:>14}", "n_bs", "baseline", "hit", "delay (s)");
    let delays = mean_by_axis(&rows, true);
    for (n_bs, baseline, hit, _) in mean_by_axis(&rows, false) {
        let delay = delays
            .iter()
            .find(|(b, k, _, _)| *b == n_bs && *k == baseline)
            .map(|(_, _, d, _)| *d)
            .unwrap();
        println!("{:<10}{:<14}{:>12.3}{:>14.5}", n_bs, baseline.to_string(), hit, delay);
    }

    let written = report(
        &ReportInputs { bs_sweep: Some(rows), ..ReportInputs::default() },
        Path::new("out/bs_sweep"),
    )?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
