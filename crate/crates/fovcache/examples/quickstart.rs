//! Minimal end-to-end run: the default synthetic setting, a handful of
//! baselines, and the per-baseline averages printed to stdout.

use fovcache::harness::{run_experiment, BaselineKind, ExperimentConfig};

fn main() -> fovcache::Result<()> {
    let mut cfg = ExperimentConfig::default_synthetic();
    cfg.baselines = vec![
        BaselineKind::Dpfl,
        BaselineKind::Sgd,
        BaselineKind::BsWeightsLearning,
        BaselineKind::TemporalWeightsLearning,
        BaselineKind::FixedBsHalf,
        BaselineKind::FixedTemporalHalf,
        BaselineKind::FedAvg,
    ];
    cfg.seeds = vec![1, 2];
    cfg.optimizer.horizon = 1000;

    let runs = run_experiment(&cfg)?;
    println!("{:<28}{:>14}{:>14}", "baseline", "avg hit", "avg delay (s)");
    for baseline in cfg.baselines {
        let of_kind: Vec<_> = runs.iter().filter(|r| r.baseline == baseline).collect();
        let hit = of_kind.iter().map(|r| r.avg_cache_hit).sum::<f64>() / of_kind.len() as f64;
        let delay = of_kind.iter().map(|r| r.avg_delay).sum::<f64>() / of_kind.len() as f64;
        println!("{:<28}{:>14.3}{:>14.5}", baseline.to_string(), hit, delay);
    }
    Ok(())
}
