//! Experiment orchestration: the slot loop wiring traces, grouping, channel
//! and the caching rounds together; the baseline set; parameter sweeps; and
//! CSV/JSON reporting.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::channel::{
    self, group_users, sample_channel_with_noise, total_delay, unicast_only, DelayParams,
    DeliveryGroups,
};
use crate::error::{Error, Result};
use crate::metrics::cache_hit_values;
use crate::optimizer::{
    local_gradient, DelayConstraint, DelayMode, DpflNetwork, OptimizerConfig, Quantization,
};
use crate::strategy::project_capped_simplex;
use crate::trace::{load_head_trace, synthetic_trace, SyntheticTraceConfig};
use crate::types::{DemandMatrix, MetricsRecord, TileGrid, Topology};

/// The comparison set: the two proposed algorithm variants, their
/// full-precision counterparts, single-family learners, frozen-weight
/// heuristics, and a conventional global-model baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Decentralized personalized rounds, sign-quantized gradients.
    Dpfl,
    /// Same, with the delay-aware regret step and multicast delivery.
    DpflDelay,
    /// Full-precision gradient exchange.
    Sgd,
    /// Full-precision, delay-aware.
    SgdDelay,
    /// Only the BS-mixing weights are learned.
    BsWeightsLearning,
    /// Only the temporal weights are learned.
    TemporalWeightsLearning,
    /// Frozen half/half mix with the first neighbor.
    FixedBsHalf,
    /// Frozen half/half mix of the last two slots (window forced to 2).
    FixedTemporalHalf,
    /// One global strategy updated with the average of all BSs' gradients.
    #[serde(rename = "fedavg")]
    FedAvg,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 9] = [
        BaselineKind::Dpfl,
        BaselineKind::DpflDelay,
        BaselineKind::Sgd,
        BaselineKind::SgdDelay,
        BaselineKind::BsWeightsLearning,
        BaselineKind::TemporalWeightsLearning,
        BaselineKind::FixedBsHalf,
        BaselineKind::FixedTemporalHalf,
        BaselineKind::FedAvg,
    ];

    pub fn delay_aware(self) -> bool {
        matches!(self, BaselineKind::DpflDelay | BaselineKind::SgdDelay)
    }

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Dpfl => "dpfl",
            BaselineKind::DpflDelay => "dpfl-delay",
            BaselineKind::Sgd => "sgd",
            BaselineKind::SgdDelay => "sgd-delay",
            BaselineKind::BsWeightsLearning => "bs-weights-learning",
            BaselineKind::TemporalWeightsLearning => "temporal-weights-learning",
            BaselineKind::FixedBsHalf => "fixed-bs-half",
            BaselineKind::FixedTemporalHalf => "fixed-temporal-half",
            BaselineKind::FedAvg => "fedavg",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .iter()
            .copied()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown baseline '{s}'")))
    }
}

/// Where the per-slot demand stream comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum TraceSource {
    Synthetic {
        correlation: f64,
        drift_rate: f64,
        #[serde(default)]
        binary: bool,
    },
    File {
        path: PathBuf,
        slot_duration: f64,
        /// Repeat the trace to fill the horizon instead of truncating it.
        #[serde(default)]
        cycle: bool,
    },
}

/// Wireless and delay model parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub antennas: usize,
    pub bandwidth_hz: f64,
    pub noise_power: f64,
    /// Power attenuation of links toward non-serving BSs.
    pub cross_gain: f64,
    /// Binary-demand cutoff deciding which (user, tile) pairs are requested.
    pub demand_cutoff: f64,
    pub delay: DelayParams,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            antennas: 12,
            bandwidth_hz: 1.0e7,
            noise_power: 1.0,
            cross_gain: 0.02,
            demand_cutoff: 0.05,
            delay: DelayParams::default(),
        }
    }
}

/// Sweep axes; each listed value spawns a full run per baseline and seed.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct SweepConfig {
    #[serde(default)]
    pub cache_sizes: Vec<f64>,
    #[serde(default)]
    pub bs_counts: Vec<usize>,
    /// Grids as (columns, rows) pairs.
    #[serde(default)]
    pub tile_grids: Vec<(usize, usize)>,
    #[serde(default)]
    pub horizons: Vec<usize>,
}

/// One experiment: topology/grid/optimizer settings, trace source, channel
/// parameters, the baselines to run, seeds, and sweep lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_bs: usize,
    pub n_users: usize,
    pub cache_capacity: f64,
    pub grid: TileGrid,
    pub optimizer: OptimizerConfig,
    pub trace: TraceSource,
    pub channel: ChannelConfig,
    pub baselines: Vec<BaselineKind>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Desk-scale default: 3 BSs, 8 users, a 6x4 grid and 2000 slots.
    pub fn default_synthetic() -> Self {
        Self {
            n_bs: 3,
            n_users: 8,
            cache_capacity: 10.0,
            grid: TileGrid { n_cols: 6, n_rows: 4, fov_width_deg: 100.0, fov_height_deg: 100.0 },
            optimizer: OptimizerConfig::default(),
            trace: TraceSource::Synthetic { correlation: 0.85, drift_rate: 0.05, binary: false },
            channel: ChannelConfig::default(),
            baselines: vec![BaselineKind::Dpfl],
            seeds: vec![1, 2, 3, 4, 5],
            sweep: SweepConfig {
                cache_sizes: vec![10.0, 15.0, 20.0, 25.0],
                bs_counts: vec![3, 5, 7],
                tile_grids: vec![(6, 4), (8, 6), (10, 8), (12, 10)],
                horizons: vec![],
            },
            output: default_output(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed required".into()));
        }
        if self.baselines.is_empty() {
            return Err(Error::InvalidConfig("at least one baseline required".into()));
        }
        if self.n_bs == 0 || self.n_users == 0 {
            return Err(Error::InvalidConfig("need at least one BS and one user".into()));
        }
        if self.cache_capacity < 1.0 {
            return Err(Error::InvalidConfig("cache capacity must be >= 1".into()));
        }
        self.grid.validate()?;
        self.optimizer.validate()?;
        self.channel.delay.validate()?;
        if self.channel.antennas == 0 {
            return Err(Error::InvalidConfig("need at least one antenna".into()));
        }
        if let TraceSource::Synthetic { correlation, drift_rate, .. } = &self.trace {
            if !(0.0..=1.0).contains(correlation) {
                return Err(Error::InvalidConfig("correlation outside [0,1]".into()));
            }
            if *drift_rate < 0.0 {
                return Err(Error::InvalidConfig("drift rate must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    fn topology(&self) -> Result<Topology> {
        Topology::complete(self.n_bs, self.n_users, self.cache_capacity)
    }
}

/// Resolves the per-slot global demand stream of one run.
fn build_demand_stream(cfg: &ExperimentConfig, seed: u64) -> Result<(Vec<Array2<f64>>, usize)> {
    match &cfg.trace {
        TraceSource::Synthetic { correlation, drift_rate, binary } => {
            let synth = SyntheticTraceConfig {
                n_users: cfg.n_users,
                n_slots: cfg.optimizer.horizon,
                grid: cfg.grid,
                correlation: *correlation,
                drift_rate: *drift_rate,
                seed,
                binary: *binary,
            };
            let slots = synthetic_trace(&synth)?;
            let horizon = slots.len();
            Ok((slots, horizon))
        }
        TraceSource::File { path, slot_duration, cycle } => {
            let slots = load_head_trace(path, *slot_duration, &cfg.grid)?;
            if slots.is_empty() {
                return Err(Error::EmptyTrace(path.display().to_string()));
            }
            let users = slots[0].nrows();
            if users != cfg.n_users {
                return Err(Error::InvalidConfig(format!(
                    "trace has {users} users but the config expects {}",
                    cfg.n_users
                )));
            }
            let horizon = if *cycle { cfg.optimizer.horizon } else { cfg.optimizer.horizon.min(slots.len()) };
            Ok((slots, horizon))
        }
    }
}

fn demand_at(stream: &[Array2<f64>], slot: usize) -> &Array2<f64> {
    &stream[slot % stream.len()]
}

/// Per-slot channel evaluation: per-pair delays, their sums, and the
/// constraint ingredients for the delay-aware step.
struct SlotDelays {
    /// Mean delay over demanded pairs, per BS.
    avg_delay: Vec<f64>,
    constraints: Vec<DelayConstraint>,
}

fn evaluate_channel(
    topology: &Topology,
    cfg: &ExperimentConfig,
    per_bs_demands: &[DemandMatrix],
    deployed: &[Array2<f64>],
    multicast_grouping: bool,
    seed: u64,
    slot: usize,
) -> Result<SlotDelays> {
    let ch = &cfg.channel;
    let groups: Vec<DeliveryGroups> = per_bs_demands
        .iter()
        .map(|d| {
            if multicast_grouping {
                group_users(&d.values, ch.demand_cutoff)
            } else {
                unicast_only(&d.values, ch.demand_cutoff)
            }
        })
        .collect();
    // One independent channel stream per (seed, slot), shared by every
    // baseline so runs on identical seeds see identical fading.
    let channel_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(slot as u64);
    let real = sample_channel_with_noise(
        channel_seed,
        topology,
        &groups,
        ch.antennas,
        ch.noise_power,
        ch.cross_gain,
        slot,
    )?;

    let shape = deployed[0].dim();
    let mut avg_delay = vec![0.0; topology.n_bs];
    let mut constraints = Vec::with_capacity(topology.n_bs);
    for b in 0..topology.n_bs {
        let streams_here = real.streams_of(b).max(1);
        let share = ch.bandwidth_hz / streams_here as f64;
        let mut delay_sum = 0.0;
        let mut transmit_sum = 0.0;
        let mut n_pairs = 0usize;
        let mut fetch = Array2::zeros(shape);
        for (tile, users) in &groups[b].multicast {
            for &u in users {
                let se = channel::multicast_rate(&real, b, u, *tile)?;
                let rate = se * share;
                let cached = deployed[b][[u, *tile]].clamp(0.0, 1.0);
                delay_sum += total_delay(&ch.delay, rate, cached)?;
                transmit_sum += channel::transmit_time(&ch.delay, rate)?;
                fetch[[u, *tile]] = channel::fetch_time(&ch.delay);
                n_pairs += 1;
            }
        }
        for &(tile, u) in &groups[b].unicast {
            let se = channel::unicast_rate(&real, b, u, tile)?;
            let rate = se * share;
            let cached = deployed[b][[u, tile]].clamp(0.0, 1.0);
            delay_sum += total_delay(&ch.delay, rate, cached)?;
            transmit_sum += channel::transmit_time(&ch.delay, rate)?;
            fetch[[u, tile]] = channel::fetch_time(&ch.delay);
            n_pairs += 1;
        }
        avg_delay[b] = if n_pairs > 0 { delay_sum / n_pairs as f64 } else { 0.0 };
        let threshold_sum = ch.delay.threshold * n_pairs as f64;
        constraints.push(DelayConstraint::from_delays(fetch, transmit_sum, threshold_sum));
    }
    Ok(SlotDelays { avg_delay, constraints })
}

/// Result of one (baseline, seed) run.
#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub baseline: BaselineKind,
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    /// Per-slot stationarity proxy averaged over BSs.
    pub stationarity: Vec<f64>,
    pub avg_cache_hit: f64,
    pub avg_delay: f64,
}

fn optimizer_for(baseline: BaselineKind, base: &OptimizerConfig) -> OptimizerConfig {
    let mut cfg = base.clone();
    cfg.quantize = match baseline {
        BaselineKind::Sgd | BaselineKind::SgdDelay | BaselineKind::FedAvg => Quantization::Full,
        _ => Quantization::Sign,
    };
    cfg.delay_mode = if baseline.delay_aware() { DelayMode::Constrained } else { DelayMode::Off };
    match baseline {
        BaselineKind::Dpfl | BaselineKind::DpflDelay | BaselineKind::Sgd | BaselineKind::SgdDelay => {}
        BaselineKind::BsWeightsLearning => {
            cfg.learn_temporal = false;
            cfg.learn_user = false;
        }
        BaselineKind::TemporalWeightsLearning => {
            cfg.learn_bs = false;
            cfg.learn_user = false;
        }
        BaselineKind::FixedBsHalf => {
            cfg.learn_temporal = false;
            cfg.learn_user = false;
            cfg.learn_bs = false;
        }
        BaselineKind::FixedTemporalHalf => {
            cfg.tau = 2;
            cfg.learn_temporal = false;
            cfg.learn_user = false;
            cfg.learn_bs = false;
        }
        BaselineKind::FedAvg => {
            cfg.learn_temporal = false;
            cfg.learn_user = false;
            cfg.learn_bs = false;
        }
    }
    cfg
}

/// Applies the frozen-weight heuristics after network construction.
fn freeze_weights(net: &mut DpflNetwork, baseline: BaselineKind) {
    if baseline != BaselineKind::FixedBsHalf {
        return;
    }
    for state in &mut net.states {
        let members = state.weights.members.len();
        for (m, w) in state.weights.bs.iter_mut().enumerate() {
            let v = if members == 1 {
                // No neighbors: all weight on self.
                if m == 0 { 1.0 } else { 0.0 }
            } else if m == 0 || m == 1 {
                0.5
            } else {
                0.0
            };
            w.fill(v);
        }
    }
}

/// Runs one baseline on one seed, slot by slot.
pub fn run_single(cfg: &ExperimentConfig, baseline: BaselineKind, seed: u64) -> Result<RunResult> {
    cfg.validate()?;
    let topology = cfg.topology()?;
    let (stream, horizon) = build_demand_stream(cfg, seed)?;
    let opt = optimizer_for(baseline, &cfg.optimizer);
    let n_tiles = cfg.grid.n_tiles();

    let mut records = Vec::with_capacity(horizon * topology.n_bs);
    let mut stationarity = Vec::with_capacity(horizon);

    if baseline == BaselineKind::FedAvg {
        return run_fedavg(cfg, &topology, &stream, horizon, &opt, seed);
    }

    let mut net = DpflNetwork::new(topology.clone(), opt.clone(), n_tiles)?;
    freeze_weights(&mut net, baseline);

    for slot in 0..horizon {
        let global = demand_at(&stream, slot);
        let per_bs: Vec<DemandMatrix> = (0..topology.n_bs)
            .map(|b| DemandMatrix::restrict(global, &topology, b, slot))
            .collect();
        let deployed: Vec<Array2<f64>> = net.states.iter().map(|s| s.deployed.clone()).collect();
        let delays = evaluate_channel(
            &topology,
            cfg,
            &per_bs,
            &deployed,
            baseline.delay_aware(),
            seed,
            slot,
        )?;
        let outputs = if baseline.delay_aware() {
            net.delay_round(&per_bs, &delays.constraints)?
        } else {
            net.round(&per_bs)?
        };
        let mut proxy = 0.0;
        for (b, mut out) in outputs.into_iter().enumerate() {
            out.record.avg_delay = delays.avg_delay[b];
            proxy += out.stationarity;
            records.push(out.record);
        }
        stationarity.push(proxy / topology.n_bs as f64);
    }
    Ok(finish_run(baseline, seed, records, stationarity))
}

/// Global-model baseline: one shared strategy updated with the average of
/// all BSs' full-precision gradients, deployed identically everywhere.
fn run_fedavg(
    cfg: &ExperimentConfig,
    topology: &Topology,
    stream: &[Array2<f64>],
    horizon: usize,
    opt: &OptimizerConfig,
    seed: u64,
) -> Result<RunResult> {
    let n_tiles = cfg.grid.n_tiles();
    let eta = opt.strategy_rate();
    let floor = opt.mse_floor;
    let budget = cfg.cache_capacity;
    let mut shared = Array2::from_elem(
        (topology.n_users, n_tiles),
        (budget / (topology.n_users * n_tiles) as f64).min(1.0),
    );
    let mut records = Vec::with_capacity(horizon * topology.n_bs);
    let mut stationarity = Vec::with_capacity(horizon);
    let mut window: Vec<Vec<Array2<f64>>> = vec![Vec::new(); topology.n_bs];
    let mut hits_window: Vec<Vec<f64>> = vec![Vec::new(); topology.n_bs];

    for slot in 0..horizon {
        let global = demand_at(stream, slot);
        let per_bs: Vec<DemandMatrix> = (0..topology.n_bs)
            .map(|b| DemandMatrix::restrict(global, topology, b, slot))
            .collect();
        let deployed: Vec<Array2<f64>> = vec![shared.clone(); topology.n_bs];
        let delays = evaluate_channel(topology, cfg, &per_bs, &deployed, false, seed, slot)?;

        let mut mean_grad: Array2<f64> = Array2::zeros(shared.dim());
        let mut slot_proxy = 0.0;
        for (b, d) in per_bs.iter().enumerate() {
            let hit = cache_hit_values(&shared, &d.values, floor)?;
            let g = local_gradient(&shared, &d.values, floor)?;
            mean_grad = mean_grad + &g;

            if window[b].len() == opt.tau {
                window[b].remove(0);
                hits_window[b].remove(0);
            }
            window[b].push(d.values.clone());
            hits_window[b].push(hit);
            let refs: Vec<&Array2<f64>> = window[b].iter().collect();
            let hind = crate::optimizer::hindsight_value(&refs, budget, floor)?;
            let regret = hind - hits_window[b].iter().sum::<f64>();
            records.push(MetricsRecord {
                slot,
                bs: b,
                cache_hit: hit,
                avg_delay: delays.avg_delay[b],
                regret,
                pac_error: 0.0,
                loss: regret,
                grad_bits_sent: (topology.n_users * n_tiles) as u64 * 32,
                infeasible: false,
            });
        }
        mean_grad /= topology.n_bs as f64;
        let next = project_capped_simplex(&(&shared + &(&mean_grad * eta)), budget, 1.0)?;
        let mapping = (&next - &shared) / eta;
        slot_proxy += mapping.iter().map(|x| x * x).sum::<f64>();
        shared = next;
        stationarity.push(slot_proxy);
    }
    Ok(finish_run(BaselineKind::FedAvg, seed, records, stationarity))
}

fn finish_run(
    baseline: BaselineKind,
    seed: u64,
    records: Vec<MetricsRecord>,
    stationarity: Vec<f64>,
) -> RunResult {
    let n = records.len().max(1) as f64;
    let avg_cache_hit = records.iter().map(|r| r.cache_hit).sum::<f64>() / n;
    let avg_delay = records.iter().map(|r| r.avg_delay).sum::<f64>() / n;
    RunResult { baseline, seed, records, stationarity, avg_cache_hit, avg_delay }
}

/// Per-(baseline, seed) table for the configured baselines; parallel over
/// (baseline, seed) pairs, deterministic output order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &baseline in &cfg.baselines {
        for &seed in &cfg.seeds {
            jobs.push((baseline, seed));
        }
    }
    let results: Vec<Result<RunResult>> = jobs
        .par_iter()
        .map(|&(baseline, seed)| run_single(cfg, baseline, seed))
        .collect();
    results.into_iter().collect()
}

/// Axis of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    CacheSize,
    BsCount,
    TileGrid,
    Horizon,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cache_size" => Ok(SweepAxis::CacheSize),
            "bs_count" => Ok(SweepAxis::BsCount),
            "tile_grid" => Ok(SweepAxis::TileGrid),
            "horizon" => Ok(SweepAxis::Horizon),
            other => Err(Error::InvalidConfig(format!("unknown sweep axis '{other}'"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepAxis::CacheSize => "cache_size",
            SweepAxis::BsCount => "bs_count",
            SweepAxis::TileGrid => "tile_grid",
            SweepAxis::Horizon => "horizon",
        };
        f.write_str(s)
    }
}

/// One row of the long-form sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub axis_value: String,
    /// Numeric meaning of the axis value (tile grids report the size ratio).
    pub axis_numeric: f64,
    pub baseline: BaselineKind,
    pub seed: u64,
    pub avg_cache_hit: f64,
    pub avg_delay: f64,
    pub final_regret: f64,
    pub mean_stationarity: f64,
}

/// Runs the configured baselines at every value of `axis`.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut variants: Vec<(String, f64, ExperimentConfig)> = Vec::new();
    match axis {
        SweepAxis::CacheSize => {
            if cfg.sweep.cache_sizes.len() < 2 {
                return Err(Error::InvalidConfig("cache_size sweep needs >= 2 values".into()));
            }
            for &c in &cfg.sweep.cache_sizes {
                let mut v = cfg.clone();
                v.cache_capacity = c;
                variants.push((format!("{c}"), c, v));
            }
        }
        SweepAxis::BsCount => {
            if cfg.sweep.bs_counts.len() < 2 {
                return Err(Error::InvalidConfig("bs_count sweep needs >= 2 values".into()));
            }
            for &b in &cfg.sweep.bs_counts {
                let mut v = cfg.clone();
                v.n_bs = b;
                variants.push((format!("{b}"), b as f64, v));
            }
        }
        SweepAxis::TileGrid => {
            if cfg.sweep.tile_grids.len() < 2 {
                return Err(Error::InvalidConfig("tile_grid sweep needs >= 2 values".into()));
            }
            for &(cols, rows) in &cfg.sweep.tile_grids {
                let mut v = cfg.clone();
                v.grid = TileGrid {
                    n_cols: cols,
                    n_rows: rows,
                    fov_width_deg: cfg.grid.fov_width_deg,
                    fov_height_deg: cfg.grid.fov_height_deg,
                };
                let ratio = v.grid.tile_size_ratio();
                variants.push((format!("{cols}x{rows}"), ratio, v));
            }
        }
        SweepAxis::Horizon => {
            if cfg.sweep.horizons.len() < 2 {
                return Err(Error::InvalidConfig("horizon sweep needs >= 2 values".into()));
            }
            for &t in &cfg.sweep.horizons {
                let mut v = cfg.clone();
                v.optimizer.horizon = t;
                variants.push((format!("{t}"), t as f64, v));
            }
        }
    }

    let mut jobs = Vec::new();
    for (vi, (label, numeric, vcfg)) in variants.iter().enumerate() {
        for &baseline in &vcfg.baselines {
            for &seed in &vcfg.seeds {
                jobs.push((vi, label.clone(), *numeric, baseline, seed));
            }
        }
    }
    let rows: Vec<Result<SweepRow>> = jobs
        .par_iter()
        .map(|(vi, label, numeric, baseline, seed)| {
            let run = run_single(&variants[*vi].2, *baseline, *seed)?;
            let final_regret = run.records.iter().rev().take(variants[*vi].2.n_bs).map(|r| r.regret).sum::<f64>()
                / variants[*vi].2.n_bs as f64;
            let mean_stationarity = if run.stationarity.is_empty() {
                0.0
            } else {
                run.stationarity.iter().sum::<f64>() / run.stationarity.len() as f64
            };
            Ok(SweepRow {
                axis: axis.to_string(),
                axis_value: label.clone(),
                axis_numeric: *numeric,
                baseline: *baseline,
                seed: *seed,
                avg_cache_hit: run.avg_cache_hit,
                avg_delay: run.avg_delay,
                final_regret,
                mean_stationarity,
            })
        })
        .collect();
    rows.into_iter().collect()
}

/// Least-squares power-law fit of a smoothed loss series against iteration
/// count, on log-log axes.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub slope_sign: f64,
    pub slope_full: f64,
    pub slope_difference: f64,
    pub mean_offset: f64,
}

/// Running mean of a series.
pub fn running_mean(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for (i, v) in series.iter().enumerate() {
        acc += v;
        out.push(acc / (i + 1) as f64);
    }
    out
}

/// Slope and intercept of the least-squares line through
/// `(ln t, ln max(y_t, 1e-12))`, skipping a leading warmup.
pub fn loglog_slope(series: &[f64], skip: usize) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(t, &y)| (((t + 1) as f64).ln(), y.max(1e-12).ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return (0.0, 0.0);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Compares the convergence of the sign-quantized and full-precision loss
/// series of paired runs.
pub fn convergence_report(loss_sign: &[f64], loss_full: &[f64]) -> Result<ConvergenceReport> {
    if loss_sign.len() != loss_full.len() {
        return Err(Error::DimensionMismatch("paired loss series differ in length".into()));
    }
    if loss_sign.len() < 100 {
        return Err(Error::InvalidArgument("need at least 100 iterations to fit slopes".into()));
    }
    let skip = loss_sign.len() / 10;
    let smooth_sign = running_mean(loss_sign);
    let smooth_full = running_mean(loss_full);
    let (slope_sign, b_sign) = loglog_slope(&smooth_sign, skip);
    let (slope_full, b_full) = loglog_slope(&smooth_full, skip);
    Ok(ConvergenceReport {
        slope_sign,
        slope_full,
        slope_difference: slope_sign - slope_full,
        mean_offset: b_sign - b_full,
    })
}

/// Aggregates rows into (axis value, baseline) means and sample stds over
/// seeds, keyed deterministically.
fn aggregate(
    rows: &[SweepRow],
    value: impl Fn(&SweepRow) -> f64,
) -> BTreeMap<(String, BaselineKind), (f64, f64, f64)> {
    let mut buckets: BTreeMap<(String, BaselineKind), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        buckets
            .entry((r.axis_value.clone(), r.baseline))
            .or_default()
            .push((r.axis_numeric, value(r)));
    }
    buckets
        .into_iter()
        .map(|(k, vs)| {
            let n = vs.len() as f64;
            let numeric = vs[0].0;
            let mean = vs.iter().map(|v| v.1).sum::<f64>() / n;
            let std = if vs.len() > 1 {
                (vs.iter().map(|v| (v.1 - mean) * (v.1 - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            (k, (numeric, mean, std))
        })
        .collect()
}

/// Seed-aggregated view used by trend assertions and the figure CSVs.
pub fn mean_by_axis(rows: &[SweepRow], delay: bool) -> Vec<(f64, BaselineKind, f64, f64)> {
    let agg = aggregate(rows, |r| if delay { r.avg_delay } else { r.avg_cache_hit });
    let mut out: Vec<(f64, BaselineKind, f64, f64)> = agg
        .into_iter()
        .map(|((_, baseline), (numeric, mean, std))| (numeric, baseline, mean, std))
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    out
}

/// Documented header contracts of the figure CSVs.
pub const FIG_HEADERS: [(&str, &str); 6] = [
    ("fig3_hit_vs_cache.csv", "cache_size,baseline,mean_cache_hit,std_cache_hit,n_seeds"),
    ("fig4_delay_vs_cache.csv", "cache_size,baseline,mean_delay_s,std_delay_s,n_seeds"),
    ("fig5_hit_vs_bs.csv", "bs_count,baseline,mean_cache_hit,std_cache_hit,n_seeds"),
    ("fig7_delay_vs_bs.csv", "bs_count,baseline,mean_delay_s,std_delay_s,n_seeds"),
    ("fig8_convergence.csv", "iteration,loss_sign,loss_full,runmean_sign,runmean_full"),
    ("fig9_tile_ratio.csv", "tile_grid,tile_size_ratio,baseline,mean_cache_hit,std_cache_hit,n_seeds"),
];

fn write_axis_csv(
    path: &Path,
    header: &str,
    rows: &[SweepRow],
    delay: bool,
    with_label: bool,
) -> Result<()> {
    let agg = aggregate(rows, |r| if delay { r.avg_delay } else { r.avg_cache_hit });
    let counts = {
        let mut c: BTreeMap<(String, BaselineKind), usize> = BTreeMap::new();
        for r in rows {
            *c.entry((r.axis_value.clone(), r.baseline)).or_default() += 1;
        }
        c
    };
    let mut sorted: Vec<_> = agg.into_iter().collect();
    sorted.sort_by(|a, b| {
        a.1 .0
            .partial_cmp(&b.1 .0)
            .unwrap()
            .then(a.0 .1.cmp(&b.0 .1))
    });
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for ((label, baseline), (numeric, mean, std)) in sorted {
        let n = counts[&(label.clone(), baseline)];
        if with_label {
            out.push_str(&format!("{label},{numeric},{baseline},{mean},{std},{n}\n"));
        } else {
            out.push_str(&format!("{numeric},{baseline},{mean},{std},{n}\n"));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Inputs for the figure CSVs; any missing part is skipped.
#[derive(Debug, Default)]
pub struct ReportInputs {
    pub cache_sweep: Option<Vec<SweepRow>>,
    pub bs_sweep: Option<Vec<SweepRow>>,
    pub tile_sweep: Option<Vec<SweepRow>>,
    pub convergence: Option<(Vec<f64>, Vec<f64>)>,
}

/// Writes one plot-ready CSV per figure analogue plus a markdown summary.
/// Returns the files written.
pub fn report(inputs: &ReportInputs, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let has_any = inputs.cache_sweep.is_some()
        || inputs.bs_sweep.is_some()
        || inputs.tile_sweep.is_some()
        || inputs.convergence.is_some();
    if !has_any {
        return Err(Error::InvalidArgument("nothing to report".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    if let Some(rows) = &inputs.cache_sweep {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("empty cache sweep table".into()));
        }
        let p = out_dir.join("fig3_hit_vs_cache.csv");
        write_axis_csv(&p, FIG_HEADERS[0].1, rows, false, false)?;
        written.push(p);
        let p = out_dir.join("fig4_delay_vs_cache.csv");
        write_axis_csv(&p, FIG_HEADERS[1].1, rows, true, false)?;
        written.push(p);
    }
    if let Some(rows) = &inputs.bs_sweep {
        let p = out_dir.join("fig5_hit_vs_bs.csv");
        write_axis_csv(&p, FIG_HEADERS[2].1, rows, false, false)?;
        written.push(p);
        let p = out_dir.join("fig7_delay_vs_bs.csv");
        write_axis_csv(&p, FIG_HEADERS[3].1, rows, true, false)?;
        written.push(p);
    }
    if let Some((sign, full)) = &inputs.convergence {
        let p = out_dir.join("fig8_convergence.csv");
        let rs = running_mean(sign);
        let rf = running_mean(full);
        let mut out = String::from(FIG_HEADERS[4].1);
        out.push('\n');
        for i in 0..sign.len().min(full.len()) {
            out.push_str(&format!("{},{},{},{},{}\n", i + 1, sign[i], full[i], rs[i], rf[i]));
        }
        std::fs::write(&p, out)?;
        written.push(p);
    }
    if let Some(rows) = &inputs.tile_sweep {
        let p = out_dir.join("fig9_tile_ratio.csv");
        write_axis_csv(&p, FIG_HEADERS[5].1, rows, false, true)?;
        written.push(p);
    }

    let mut summary = String::from("# Results summary\n\nFiles written:\n");
    for p in &written {
        summary.push_str(&format!("- {}\n", p.file_name().unwrap().to_string_lossy()));
    }
    let sp = out_dir.join("summary.md");
    std::fs::write(&sp, summary)?;
    written.push(sp);
    Ok(written)
}

/// Writes the long-form per-slot metrics table of a set of runs.
pub fn write_metrics_csv(runs: &[RunResult], path: &Path) -> Result<()> {
    let mut out =
        String::from("baseline,seed,slot,bs,cache_hit,avg_delay,regret,pac_error,loss,grad_bits_sent,infeasible\n");
    for run in runs {
        for r in &run.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                run.baseline,
                run.seed,
                r.slot,
                r.bs,
                r.cache_hit,
                r.avg_delay,
                r.regret,
                r.pac_error,
                r.loss,
                r.grad_bits_sent,
                r.infeasible
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// JSON summary of a set of runs: per-baseline means and sample stds over
/// seeds.
pub fn write_summary_json(runs: &[RunResult], path: &Path) -> Result<()> {
    let mut by_baseline: BTreeMap<String, Vec<&RunResult>> = BTreeMap::new();
    for r in runs {
        by_baseline.entry(r.baseline.to_string()).or_default().push(r);
    }
    let mut summary = serde_json::Map::new();
    for (name, rs) in by_baseline {
        let n = rs.len() as f64;
        let hit_mean = rs.iter().map(|r| r.avg_cache_hit).sum::<f64>() / n;
        let delay_mean = rs.iter().map(|r| r.avg_delay).sum::<f64>() / n;
        let hit_std = if rs.len() > 1 {
            (rs.iter().map(|r| (r.avg_cache_hit - hit_mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let delay_std = if rs.len() > 1 {
            (rs.iter().map(|r| (r.avg_delay - delay_mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        summary.insert(
            name,
            serde_json::json!({
                "seeds": rs.len(),
                "avg_cache_hit": {"mean": hit_mean, "std": hit_std},
                "avg_delay": {"mean": delay_mean, "std": delay_std},
            }),
        );
    }
    std::fs::write(path, serde_json::to_string_pretty(&serde_json::Value::Object(summary)).unwrap())?;
    Ok(())
}
