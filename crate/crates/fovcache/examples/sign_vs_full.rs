//! Paired comparison of one-bit-quantized and full-precision gradient
//! exchange on identical seeds: fitted loss slopes, their difference, and the
//! exchanged gradient traffic.

use fovcache::harness::{
    convergence_report, report, run_single, BaselineKind, ExperimentConfig, ReportInputs,
};
use std::path::Path;

fn main() -> fovcache::Result<()> {
    let mut cfg = ExperimentConfig::default_synthetic();
    cfg.optimizer.horizon = 5000;
    let seed = 1;

    let sign = run_single(&cfg, BaselineKind::Dpfl, seed)?;
    let full = run_single(&cfg, BaselineKind::Sgd, seed)?;

    let per_slot_loss = |run: &fovcache::harness::RunResult| -> Vec<f64> {
        let n_bs = run.records.iter().map(|r| r.bs).max().unwrap_or(0) + 1;
        run.records
            .chunks(n_bs)
            .map(|c| c.iter().map(|r| r.loss).sum::<f64>() / c.len() as f64)
            .collect()
    };
    let loss_sign = per_slot_loss(&sign);
    let loss_full = per_slot_loss(&full);

    let rep = convergence_report(&loss_sign, &loss_full)?;
    let bits_sign: u64 = sign.records.iter().map(|r| r.grad_bits_sent).sum();
    let bits_full: u64 = full.records.iter().map(|r| r.grad_bits_sent).sum();

    println!("slope (sign) = {:+.4}", rep.slope_sign);
    println!("slope (full) = {:+.4}", rep.slope_full);
    println!("difference   = {:+.4}", rep.slope_difference);
    println!("gradient traffic: sign {} bits, full {} bits (ratio {:.5})",
        bits_sign, bits_full, bits_sign as f64 / bits_full as f64);

    let written = report(
        &ReportInputs { convergence: Some((loss_sign, loss_full)), ..ReportInputs::default() },
        Path::new("out/convergence"),
    )?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
