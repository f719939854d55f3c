//! Thin command-line front end over the library: single runs, parameter
//! sweeps, raw-trace conversion, and figure-CSV reporting.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use fovcache::harness::{self, convergence_report, sweep, ExperimentConfig, ReportInputs, SweepAxis};
use fovcache::optimizer::Quantization;
use fovcache::trace::{convert_raw_trace, RawTraceFormat};

#[derive(Parser)]
#[command(name = "fovcache", version, about = "Edge FoV-caching simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantizeArg {
    Sign,
    Full,
}

#[derive(Args)]
struct CommonOverrides {
    /// Replace the config's seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel runs (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the gradient exchange precision.
    #[arg(long, value_enum)]
    quantize: Option<QuantizeArg>,
    /// Output directory (overrides the config).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured baselines once per seed and write metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: CommonOverrides,
    },
    /// Sweep one axis (cache_size | bs_count | tile_grid | horizon).
    Sweep {
        #[arg(long)]
        axis: String,
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: CommonOverrides,
    },
    /// Convert a raw head-tracking export to the normalized CSV schema.
    ConvertTrace {
        #[arg(long)]
        input: PathBuf,
        /// Raw format: dataset1 (quaternions) or dataset2 (Euler angles).
        #[arg(long)]
        format: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Build the figure CSVs from a directory of sweep outputs.
    Report {
        /// Directory containing sweep_*.csv files produced by `sweep`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "out/report")]
        output: PathBuf,
    },
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &CommonOverrides) {
    if let Some(seed) = o.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(q) = o.quantize {
        cfg.optimizer.quantize = match q {
            QuantizeArg::Sign => Quantization::Sign,
            QuantizeArg::Full => Quantization::Full,
        };
    }
    if let Some(out) = &o.output {
        cfg.output = out.clone();
    }
}

fn install_thread_pool(threads: Option<usize>) -> fovcache::Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| fovcache::Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn cmd_run(config: PathBuf, overrides: CommonOverrides) -> fovcache::Result<()> {
    install_thread_pool(overrides.threads)?;
    let mut cfg = ExperimentConfig::from_toml_file(&config)?;
    apply_overrides(&mut cfg, &overrides);
    let runs = harness::run_experiment(&cfg)?;
    std::fs::create_dir_all(&cfg.output)?;
    let metrics = cfg.output.join("metrics.csv");
    harness::write_metrics_csv(&runs, &metrics)?;
    let summary = cfg.output.join("summary.json");
    harness::write_summary_json(&runs, &summary)?;
    println!("wrote {}", metrics.display());
    println!("wrote {}", summary.display());
    Ok(())
}

fn write_sweep_csv(rows: &[harness::SweepRow], path: &PathBuf) -> fovcache::Result<()> {
    let mut out = String::from(
        "axis,axis_value,axis_numeric,baseline,seed,avg_cache_hit,avg_delay,final_regret,mean_stationarity\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.axis,
            r.axis_value,
            r.axis_numeric,
            r.baseline,
            r.seed,
            r.avg_cache_hit,
            r.avg_delay,
            r.final_regret,
            r.mean_stationarity
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_sweep(axis: String, config: PathBuf, overrides: CommonOverrides) -> fovcache::Result<()> {
    install_thread_pool(overrides.threads)?;
    let mut cfg = ExperimentConfig::from_toml_file(&config)?;
    apply_overrides(&mut cfg, &overrides);
    let axis: SweepAxis = axis.parse()?;
    let rows = sweep(&cfg, axis)?;
    std::fs::create_dir_all(&cfg.output)?;
    let path = cfg.output.join(format!("sweep_{axis}.csv"));
    write_sweep_csv(&rows, &path)?;
    println!("wrote {}", path.display());

    // Figure CSVs straight from the sweep when the axis maps to one.
    let inputs = match axis {
        SweepAxis::CacheSize => ReportInputs { cache_sweep: Some(rows), ..Default::default() },
        SweepAxis::BsCount => ReportInputs { bs_sweep: Some(rows), ..Default::default() },
        SweepAxis::TileGrid => ReportInputs { tile_sweep: Some(rows), ..Default::default() },
        SweepAxis::Horizon => return Ok(()),
    };
    for p in harness::report(&inputs, &cfg.output)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_convert(input: PathBuf, format: String, output: PathBuf) -> fovcache::Result<()> {
    let format = match format.as_str() {
        "dataset1" => RawTraceFormat::Dataset1,
        "dataset2" => RawTraceFormat::Dataset2,
        other => {
            return Err(fovcache::Error::InvalidConfig(format!(
                "unknown format '{other}' (expected dataset1 or dataset2)"
            )))
        }
    };
    let reader = std::fs::File::open(&input)?;
    let writer = std::fs::File::create(&output)?;
    let rows = convert_raw_trace(reader, writer, format)?;
    println!("converted {rows} samples to {}", output.display());
    Ok(())
}

/// Rebuilds figure CSVs from previously written sweep tables. Convergence
/// inputs come from `fig8_input.csv` (iteration,loss_sign,loss_full) when
/// present.
fn cmd_report(input: PathBuf, output: PathBuf) -> fovcache::Result<()> {
    let mut inputs = ReportInputs::default();
    let read_rows = |name: &str| -> fovcache::Result<Option<Vec<harness::SweepRow>>> {
        let path = input.join(name);
        if !path.exists() {
            return Ok(None);
        }
        let mut rdr = csv::Reader::from_path(&path)?;
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(harness::SweepRow {
                axis: rec[0].to_string(),
                axis_value: rec[1].to_string(),
                axis_numeric: rec[2].parse().unwrap_or(0.0),
                baseline: rec[3].parse()?,
                seed: rec[4].parse().unwrap_or(0),
                avg_cache_hit: rec[5].parse().unwrap_or(0.0),
                avg_delay: rec[6].parse().unwrap_or(0.0),
                final_regret: rec[7].parse().unwrap_or(0.0),
                mean_stationarity: rec[8].parse().unwrap_or(0.0),
            });
        }
        Ok(Some(rows))
    };
    inputs.cache_sweep = read_rows("sweep_cache_size.csv")?;
    inputs.bs_sweep = read_rows("sweep_bs_count.csv")?;
    inputs.tile_sweep = read_rows("sweep_tile_grid.csv")?;
    let conv = input.join("fig8_input.csv");
    if conv.exists() {
        let mut rdr = csv::Reader::from_path(&conv)?;
        let mut sign = Vec::new();
        let mut full = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            sign.push(rec[1].parse().unwrap_or(0.0));
            full.push(rec[2].parse().unwrap_or(0.0));
        }
        if sign.len() >= 100 {
            let rep = convergence_report(&sign, &full)?;
            println!(
                "convergence slopes: sign {:.4}, full {:.4}, difference {:.4}",
                rep.slope_sign, rep.slope_full, rep.slope_difference
            );
        }
        inputs.convergence = Some((sign, full));
    }
    for p in harness::report(&inputs, &output)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => cmd_run(config, overrides),
        Command::Sweep { axis, config, overrides } => cmd_sweep(axis, config, overrides),
        Command::ConvertTrace { input, format, output } => cmd_convert(input, format, output),
        Command::Report { input, output } => cmd_report(input, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({ "error": e.to_string() });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
