//! Tile-partition sweep: average cache hit against the tile-to-viewport size
//! ratio, over grids from coarse (6x4) to fine (12x10).

use fovcache::harness::{report, sweep, BaselineKind, ExperimentConfig, ReportInputs, SweepAxis};
use fovcache::types::TileGrid;
use std::path::Path;

fn main() -> fovcache::Result<()> {
    let mut cfg = ExperimentConfig::default_synthetic();
    cfg.baselines = vec![BaselineKind::Dpfl, BaselineKind::DpflDelay];
    cfg.seeds = vec![1, 2, 3];
    cfg.optimizer.horizon = 800;
    cfg.sweep.tile_grids = vec![(6, 4), (8, 6), (10, 8), (12, 10)];

    for &(c, r) in &cfg.sweep.tile_grids {
        let g = TileGrid { n_cols: c, n_rows: r, ..cfg.grid };
        println!("grid {c}x{r}: {} tiles, tile/viewport ratio {:.3}", g.n_tiles(), g.tile_size_ratio());
    }

    let rows = sweep(&cfg, SweepAxis::TileGrid)?;
    let mut agg: Vec<(String, f64, String, f64)> = Vec::new();
    for row in &rows {
        if let Some(slot) = agg
            .iter_mut()
            .find(|(v, _, b, _)| *v == row.axis_value && *b == row.baseline.to_string())
        {
            slot.3 += row.avg_cache_hit;
        } else {
            agg.push((row.axis_value.clone(), row.axis_numeric, row.baseline.to_string(), row.avg_cache_hit));
        }
    }
    let n_seeds = cfg.seeds.len() as f64;
    println!("{:<10}{:<10}{:<14}{:>10}", "grid", "ratio", "baseline", "hit");
    for (value, ratio, baseline, hit_sum) in agg {
        println!("{:<10}{:<10.3}{:<14}{:>10.3}", value, ratio, baseline, hit_sum / n_seeds);
    }

    let written = report(
        &ReportInputs { tile_sweep: Some(rows), ..ReportInputs::default() },
        Path::new("out/tile_sweep"),
    )?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
