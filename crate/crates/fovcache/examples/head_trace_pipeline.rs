//! File-trace pipeline end to end: synthesize a raw quaternion export,
//! convert it to the normalized CSV schema, bucket it into slots, and run a
//! short experiment on the result.

use fovcache::harness::{run_single, BaselineKind, ExperimentConfig, TraceSource};
use fovcache::trace::{convert_raw_trace, load_head_trace, RawTraceFormat};
use std::io::Write;

fn main() -> fovcache::Result<()> {
    let dir = std::env::temp_dir().join("fovcache_head_trace_example");
    std::fs::create_dir_all(&dir)?;
    let raw_path = dir.join("raw.csv");
    let csv_path = dir.join("trace.csv");

    // 1800 samples per user at 30 Hz (60 s), slowly panning right.
    let n_users = 4;
    let mut raw = String::from("user,timestamp,qx,qy,qz,qw\n");
    for u in 0..n_users {
        for k in 0..1800 {
            let ts = k as f64 / 30.0;
            let angle = (ts * 3.0 + u as f64 * 10.0).to_radians() / 2.0;
            raw.push_str(&format!("{u},{ts},0,{},0,{}\n", angle.sin(), angle.cos()));
        }
    }
    std::fs::File::create(&raw_path)?.write_all(raw.as_bytes())?;

    let rows = convert_raw_trace(
        std::fs::File::open(&raw_path)?,
        std::fs::File::create(&csv_path)?,
        RawTraceFormat::Dataset1,
    )?;
    println!("converted {rows} raw samples");

    let mut cfg = ExperimentConfig::default_synthetic();
    cfg.n_users = n_users;
    let slots = load_head_trace(&csv_path, 1.0, &cfg.grid)?;
    println!("bucketed into {} slots of 1 s", slots.len());

    cfg.trace = TraceSource::File { path: csv_path, slot_duration: 1.0, cycle: false };
    cfg.optimizer.tau = 3;
    cfg.optimizer.horizon = slots.len();
    let run = run_single(&cfg, BaselineKind::Dpfl, 1)?;
    println!(
        "ran {} slots on the file trace: avg hit {:.2}, avg delay {:.4} s",
        run.records.len() / cfg.n_bs,
        run.avg_cache_hit,
        run.avg_delay
    );
    Ok(())
}
