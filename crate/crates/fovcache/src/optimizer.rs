//! Decentralized per-BS online caching rounds: a no-regret projected ascent
//! step on the strategy, one-bit quantized gradient exchange between
//! neighbors, projected updates of the three weight families, and the
//! strategy combination producing the next deployed cache.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::metrics::{
    self, cache_hit_gradient, cache_hit_values, cell_hit, cell_hit_grad, max_cache_hit, max_quality,
};
use crate::strategy::{
    bs_combine, project_capped_simplex, project_capped_simplex_with_halfspace,
    project_probability_simplex, temporal_combine, user_combine, StrategyHistory, WeightSet,
};
use crate::types::{DemandMatrix, MetricsRecord, Topology};

/// Gradient exchange precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantization {
    /// Elementwise signs, one bit per entry.
    Sign,
    /// Raw values, 32 bits per entry in the traffic accounting.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayMode {
    Off,
    Constrained,
}

/// Learning-rate and window configuration of the caching rounds. Rates left
/// unset default to `1/sqrt(horizon)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Strategy step size.
    pub rate_strategy: Option<f64>,
    /// Temporal-weight step size.
    pub rate_temporal: Option<f64>,
    /// BS-weight step size.
    pub rate_bs: Option<f64>,
    /// User-weight step size.
    pub rate_user: Option<f64>,
    /// Window length for combination, estimation and regret.
    pub tau: usize,
    /// Number of slots in a run.
    pub horizon: usize,
    /// Demand slots averaged into each gradient estimate.
    pub batch: usize,
    pub quantize: Quantization,
    pub delay_mode: DelayMode,
    /// Confidence for the deviation penalty inside the temporal-weight update.
    pub azuma_delta: f64,
    /// MSE floor of the quality metric.
    pub mse_floor: f64,
    /// Which weight families are updated; frozen families keep their values.
    pub learn_temporal: bool,
    pub learn_user: bool,
    pub learn_bs: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            rate_strategy: None,
            rate_temporal: None,
            rate_bs: None,
            rate_user: None,
            tau: 5,
            horizon: 2000,
            batch: 1,
            quantize: Quantization::Sign,
            delay_mode: DelayMode::Off,
            azuma_delta: 0.05,
            mse_floor: metrics::DEFAULT_MSE_FLOOR,
            learn_temporal: true,
            learn_user: true,
            learn_bs: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::InvalidConfig("tau must be >= 1".into()));
        }
        if self.horizon < self.tau {
            return Err(Error::InvalidConfig(format!(
                "horizon {} shorter than window {}",
                self.horizon, self.tau
            )));
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("batch must be >= 1".into()));
        }
        for (name, r) in [
            ("rate_strategy", self.rate_strategy),
            ("rate_temporal", self.rate_temporal),
            ("rate_bs", self.rate_bs),
            ("rate_user", self.rate_user),
        ] {
            if let Some(r) = r {
                if r <= 0.0 {
                    return Err(Error::InvalidConfig(format!("{name} must be positive")));
                }
            }
        }
        if !(0.0 < self.azuma_delta && self.azuma_delta < 1.0) {
            return Err(Error::InvalidConfig("azuma_delta must lie in (0,1)".into()));
        }
        if self.mse_floor <= 0.0 {
            return Err(Error::InvalidConfig("mse floor must be positive".into()));
        }
        Ok(())
    }

    fn resolve(rate: Option<f64>, horizon: usize) -> f64 {
        rate.unwrap_or_else(|| 1.0 / (horizon as f64).sqrt())
    }

    pub fn strategy_rate(&self) -> f64 {
        Self::resolve(self.rate_strategy, self.horizon)
    }

    pub fn temporal_rate(&self) -> f64 {
        Self::resolve(self.rate_temporal, self.horizon)
    }

    pub fn bs_rate(&self) -> f64 {
        Self::resolve(self.rate_bs, self.horizon)
    }

    pub fn user_rate(&self) -> f64 {
        Self::resolve(self.rate_user, self.horizon)
    }
}

/// One BS's gradient broadcast for a slot.
#[derive(Debug, Clone)]
pub struct GradientMessage {
    pub from_bs: usize,
    pub slot: usize,
    pub payload: Array2<f64>,
}

/// Local strategy gradient on the current slot's demands.
pub fn local_gradient(strategy: &Array2<f64>, demands: &Array2<f64>, floor: f64) -> Result<Array2<f64>> {
    cache_hit_gradient(strategy, demands, floor)
}

fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Subgradient of `|x|` smoothed over a band around the kink. The band is
/// sized to `rate * penalty` by the caller so the restoring step contracts
/// instead of rattling at the step size.
fn smoothed_sign(x: f64, band: f64) -> f64 {
    (x / band).clamp(-1.0, 1.0)
}

/// Elementwise sign with `sign(0) = 0`.
pub fn one_bit_quantize(g: &Array2<f64>) -> Array2<f64> {
    g.mapv(signum0)
}

/// Online projected ascent step of the no-regret sequence.
pub fn regret_min_step(
    prev: &Array2<f64>,
    grad: &Array2<f64>,
    eta: f64,
    budget: f64,
) -> Result<Array2<f64>> {
    if eta <= 0.0 {
        return Err(Error::InvalidArgument("step size must be positive".into()));
    }
    project_capped_simplex(&(prev + &(grad * eta)), budget, 1.0)
}

/// Per-BS halfspace constraint of the delay-aware round:
/// `sum_cells coeffs * phi >= rhs` with nonnegative coefficients.
#[derive(Debug, Clone)]
pub struct DelayConstraint {
    pub coeffs: Array2<f64>,
    pub rhs: f64,
}

impl DelayConstraint {
    /// Builds the constraint from per-cell fetch delays over demanded cells
    /// plus the transmit and threshold totals of the slot.
    pub fn from_delays(fetch: Array2<f64>, transmit_sum: f64, threshold_sum: f64) -> Self {
        let rhs = transmit_sum + fetch.sum() - threshold_sum;
        Self { coeffs: fetch, rhs }
    }

    pub fn inactive(shape: (usize, usize)) -> Self {
        Self { coeffs: Array2::zeros(shape), rhs: 0.0 }
    }
}

/// Best fixed strategy over a demand window for an integer budget: ones on
/// the cells with the largest cumulative quality weight.
pub fn hindsight_optimal(window: &[&Array2<f64>], budget: f64, floor: f64) -> Result<Array2<f64>> {
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty hindsight window".into()));
    }
    let dim = window[0].dim();
    let q_max = max_quality(floor);
    let mut weights: Vec<(f64, usize)> = Vec::with_capacity(dim.0 * dim.1);
    for idx in 0..dim.0 * dim.1 {
        let (i, f) = (idx / dim.1, idx % dim.1);
        let w: f64 = window
            .iter()
            .map(|d| if d[[i, f]] > 0.0 { q_max } else { 0.0 })
            .sum();
        weights.push((w, idx));
    }
    // Stable top-k: larger weight first, index order breaking ties.
    weights.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let k = (budget.floor() as usize).min(weights.len());
    let mut out = Array2::zeros(dim);
    for &(w, idx) in weights.iter().take(k) {
        if w > 0.0 {
            out[[idx / dim.1, idx % dim.1]] = 1.0;
        }
    }
    Ok(out)
}

/// Cumulative hit of the hindsight-optimal fixed strategy over the window.
pub fn hindsight_value(window: &[&Array2<f64>], budget: f64, floor: f64) -> Result<f64> {
    let best = hindsight_optimal(window, budget, floor)?;
    let mut total = 0.0;
    for d in window {
        total += cache_hit_values(&best, d, floor)?;
    }
    Ok(total)
}

/// Mutable per-BS state carried across rounds.
#[derive(Debug, Clone)]
pub struct BsState {
    pub bs: usize,
    /// Strategy serving the current slot (combined and projected last round).
    pub deployed: Array2<f64>,
    /// Online strategy sequence driven by the gradient steps.
    pub internal: Array2<f64>,
    pub weights: WeightSet,
    pub history: StrategyHistory,
    regret_seq: VecDeque<Array2<f64>>,
    temporal_seq: VecDeque<Array2<f64>>,
    demand_seq: VecDeque<Array2<f64>>,
    /// Windowed user-combined strategies per neighborhood member (self first).
    member_bars: Vec<VecDeque<Array2<f64>>>,
    online_hits: VecDeque<f64>,
    pub associated: Vec<usize>,
    budget: f64,
}

impl BsState {
    fn push_window<T>(buf: &mut VecDeque<T>, cap: usize, value: T) {
        if buf.len() == cap {
            buf.pop_front();
        }
        buf.push_back(value);
    }
}

/// Outputs of one slot for one BS.
#[derive(Debug, Clone)]
pub struct RoundOutput {
    pub record: MetricsRecord,
    /// Squared norms of the four projected-gradient mappings of the slot.
    pub stationarity: f64,
}

/// The whole network state plus the slot counter.
#[derive(Debug, Clone)]
pub struct DpflNetwork {
    pub topology: Topology,
    pub cfg: OptimizerConfig,
    pub states: Vec<BsState>,
    pub slot: usize,
}

impl DpflNetwork {
    pub fn new(topology: Topology, cfg: OptimizerConfig, n_tiles: usize) -> Result<Self> {
        topology.validate()?;
        cfg.validate()?;
        let n_users = topology.n_users;
        let mut states = Vec::with_capacity(topology.n_bs);
        for b in 0..topology.n_bs {
            let associated = topology.users_of(b, 0);
            let members = topology.members_of(b);
            let budget = topology.cache_capacity[b];
            // Start from a uniform spread of the budget over the own rows.
            let mut init = Array2::zeros((n_users, n_tiles));
            if !associated.is_empty() {
                let per = (budget / (associated.len() * n_tiles) as f64).min(1.0);
                for &u in &associated {
                    init.row_mut(u).fill(per);
                }
            }
            let weights = WeightSet::uniform(n_users, n_tiles, cfg.tau, &associated, members.clone());
            let mut member_bars = Vec::with_capacity(members.len());
            for _ in &members {
                member_bars.push(VecDeque::with_capacity(cfg.tau));
            }
            states.push(BsState {
                bs: b,
                deployed: init.clone(),
                internal: init.clone(),
                weights,
                history: StrategyHistory::filled(cfg.tau, init),
                regret_seq: VecDeque::with_capacity(cfg.tau),
                temporal_seq: VecDeque::with_capacity(cfg.tau),
                demand_seq: VecDeque::with_capacity(cfg.tau),
                member_bars,
                online_hits: VecDeque::with_capacity(cfg.tau),
                associated,
                budget,
            });
        }
        Ok(Self { topology, cfg, states, slot: 0 })
    }

    /// One slot of the unconstrained algorithm.
    pub fn round(&mut self, demands: &[DemandMatrix]) -> Result<Vec<RoundOutput>> {
        self.step(demands, None)
    }

    /// One slot of the delay-aware algorithm; `constraints` holds one
    /// halfspace per BS built from the slot's channel delays.
    pub fn delay_round(
        &mut self,
        demands: &[DemandMatrix],
        constraints: &[DelayConstraint],
    ) -> Result<Vec<RoundOutput>> {
        if constraints.len() != self.states.len() {
            return Err(Error::DimensionMismatch("one delay constraint per BS required".into()));
        }
        self.step(demands, Some(constraints))
    }

    fn step(
        &mut self,
        demands: &[DemandMatrix],
        constraints: Option<&[DelayConstraint]>,
    ) -> Result<Vec<RoundOutput>> {
        if demands.len() != self.states.len() {
            return Err(Error::DimensionMismatch("one demand matrix per BS required".into()));
        }
        let slot = self.slot;
        let cfg = self.cfg.clone();
        let eta = cfg.strategy_rate();
        let floor = cfg.mse_floor;
        let tau = cfg.tau;

        struct PhaseA {
            realized_hit: f64,
            regret_point: Array2<f64>,
            payload: Array2<f64>,
            infeasible: bool,
            strategy_mapping_sq: f64,
        }

        // Phase A: per-BS regret step and gradient message, from a snapshot.
        let mut phase_a = Vec::with_capacity(self.states.len());
        for (b, state) in self.states.iter().enumerate() {
            let d = &demands[b].values;
            if d.dim() != state.internal.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "demand shape {:?} vs strategy {:?} at BS {b}",
                    d.dim(),
                    state.internal.dim()
                )));
            }
            let realized_hit = cache_hit_values(&state.deployed, d, floor)?;
            let g_online = local_gradient(&state.internal, d, floor)?;
            if g_online.iter().any(|x| !x.is_finite()) {
                return Err(Error::NumericFault { slot, detail: format!("non-finite gradient at BS {b}") });
            }
            let raw = &state.internal + &(&g_online * eta);
            let (regret_point, infeasible) = match constraints {
                None => (project_capped_simplex(&raw, state.budget, 1.0)?, false),
                Some(cs) => {
                    let c = &cs[b];
                    let out = project_capped_simplex_with_halfspace(
                        &raw,
                        state.budget,
                        1.0,
                        &c.coeffs,
                        c.rhs,
                        100,
                        1e-8,
                    )?;
                    (out.values, out.infeasible)
                }
            };
            let mapping = (&regret_point - &state.internal) / eta;
            let strategy_mapping_sq = mapping.iter().map(|x| x * x).sum();

            // Gradient estimate at the regret point, optionally averaged over
            // the most recent demand slots.
            let mut g_local = local_gradient(&regret_point, d, floor)?;
            if cfg.batch > 1 {
                let mut n = 1.0;
                for past in state.demand_seq.iter().rev().take(cfg.batch - 1) {
                    g_local = g_local + local_gradient(&regret_point, past, floor)?;
                    n += 1.0;
                }
                g_local /= n;
            }
            let payload = match cfg.quantize {
                Quantization::Sign => one_bit_quantize(&g_local),
                Quantization::Full => g_local,
            };
            phase_a.push(PhaseA { realized_hit, regret_point, payload, infeasible, strategy_mapping_sq });
        }

        // Barrier: all slot-t messages are now available.
        let messages: Vec<GradientMessage> = phase_a
            .iter()
            .enumerate()
            .map(|(b, a)| GradientMessage { from_bs: b, slot, payload: a.payload.clone() })
            .collect();

        // Phase B: sign aggregation, strategy update, weight updates, own
        // combined strategy.
        let mut bars = Vec::with_capacity(self.states.len());
        let mut weight_mappings = Vec::with_capacity(self.states.len());
        for (b, state) in self.states.iter_mut().enumerate() {
            let a = &phase_a[b];
            let d = &demands[b].values;
            let members = self.topology.members_of(b);
            let mut direction: Array2<f64> = Array2::zeros(state.internal.dim());
            let latest_temporal = &state.weights.temporal[tau - 1];
            for (pos, &m) in members.iter().enumerate() {
                let payload = &messages[m].payload;
                let w = &state.weights.bs[pos] * latest_temporal;
                direction = direction + &(&w * payload);
            }
            let phi_new = project_capped_simplex(&(&a.regret_point + &(&direction * eta)), state.budget, 1.0)?;

            state.history.push(slot, phi_new.clone());
            BsState::push_window(&mut state.regret_seq, tau, a.regret_point.clone());
            BsState::push_window(&mut state.demand_seq, tau, d.clone());
            BsState::push_window(&mut state.online_hits, tau, a.realized_hit);
            state.internal = phi_new;

            let mut mapping_sq = 0.0;
            if cfg.learn_bs && members.len() > 1 {
                mapping_sq += update_bs_weights(state, &cfg)?;
            }
            if cfg.learn_temporal {
                mapping_sq += update_temporal_weights(state, &cfg)?;
            }
            let tilde = temporal_combine(&state.history, &state.weights.temporal)?;
            BsState::push_window(&mut state.temporal_seq, tau, tilde.clone());
            if cfg.learn_user && state.associated.len() > 1 {
                mapping_sq += update_user_weights(state, &cfg)?;
            }
            let bar = user_combine(&tilde, &state.weights.user, &state.associated)?;
            bars.push(bar);
            weight_mappings.push(mapping_sq);
        }

        // Phase C: exchange combined strategies, mix across the
        // neighborhood, deploy, and record metrics.
        let mut outputs = Vec::with_capacity(self.states.len());
        for (b, state) in self.states.iter_mut().enumerate() {
            let members = self.topology.members_of(b);
            for (pos, &m) in members.iter().enumerate() {
                BsState::push_window(&mut state.member_bars[pos], tau, bars[m].clone());
            }
            let neighbor_bars: Vec<&Array2<f64>> = members[1..].iter().map(|&m| &bars[m]).collect();
            let mixed = bs_combine(&bars[b], &neighbor_bars, &state.weights.bs)?;
            state.deployed = project_capped_simplex(&mixed, state.budget, 1.0)?;

            let a = &phase_a[b];
            let record = assemble_record(state, &cfg, slot, a.realized_hit, a.infeasible, &self.topology)?;
            outputs.push(RoundOutput {
                record,
                stationarity: a.strategy_mapping_sq + weight_mappings[b],
            });
        }

        self.slot += 1;
        Ok(outputs)
    }
}

/// Temporal-weight ascent: per-cell simplex steps on the windowed value of
/// the regret sequence, regularized by the deviation penalties of the
/// performance bound. Returns the squared projected-gradient mapping norm.
fn update_temporal_weights(state: &mut BsState, cfg: &OptimizerConfig) -> Result<f64> {
    let tau = cfg.tau;
    if state.regret_seq.len() < tau || state.demand_seq.len() < tau {
        return Ok(0.0);
    }
    let rate = cfg.temporal_rate();
    let floor = cfg.mse_floor;
    let c_cell = max_quality(floor);
    let band = (rate * c_cell).max(1e-6);
    let kappa = ((2.0 / tau as f64) * (1.0 / cfg.azuma_delta).ln()).sqrt();
    let n_tiles = state.internal.ncols();
    let uniform = 1.0 / tau as f64;

    let regret_seq: Vec<&Array2<f64>> = state.regret_seq.iter().collect();
    let demand_seq: Vec<&Array2<f64>> = state.demand_seq.iter().collect();
    let history: Vec<&Array2<f64>> = state.history.iter().collect();
    let tilde_now = temporal_combine(&state.history, &state.weights.temporal)?;

    let mut mapping_sq = 0.0;
    let mut sigma = vec![0.0; tau];
    let mut grad = vec![0.0; tau];
    let mut deltas = vec![0.0; tau];
    for &i in &state.associated.clone() {
        for f in 0..n_tiles {
            for t in 0..tau {
                sigma[t] = state.weights.temporal[t][[i, f]];
            }
            let norm2 = sigma.iter().map(|s| s * s).sum::<f64>().sqrt().max(1e-12);
            // Drift of the current combination against each stored slot.
            let q_now: f64 = (0..tau)
                .map(|s| cell_hit(tilde_now[[i, f]], demand_seq[s][[i, f]], floor))
                .sum::<f64>()
                / tau as f64;
            for t in 0..tau {
                deltas[t] = q_now - cell_hit(history[t][[i, f]], demand_seq[t][[i, f]], floor);
            }
            let drift_sign = smoothed_sign((0..tau).map(|t| sigma[t] * deltas[t]).sum(), band);
            for t in 0..tau {
                let base = cell_hit(regret_seq[t][[i, f]], demand_seq[t][[i, f]], floor);
                grad[t] = base
                    - c_cell * kappa * sigma[t] / norm2
                    - c_cell * smoothed_sign(sigma[t] - uniform, band)
                    - drift_sign * deltas[t];
            }
            let stepped: Vec<f64> = (0..tau).map(|t| sigma[t] + rate * grad[t]).collect();
            let projected = project_probability_simplex(&stepped)?;
            for t in 0..tau {
                let diff = (projected[t] - sigma[t]) / rate;
                mapping_sq += diff * diff;
                state.weights.temporal[t][[i, f]] = projected[t];
            }
        }
    }
    Ok(mapping_sq)
}

/// BS-weight ascent on the windowed estimate of the mixed strategy's local
/// hit; weight drifts toward members whose broadcast strategies score on the
/// local demands.
fn update_bs_weights(state: &mut BsState, cfg: &OptimizerConfig) -> Result<f64> {
    let window = state
        .member_bars
        .iter()
        .map(|b| b.len())
        .min()
        .unwrap_or(0)
        .min(state.demand_seq.len());
    if window == 0 {
        return Ok(0.0);
    }
    let rate = cfg.bs_rate();
    let floor = cfg.mse_floor;
    let n_members = state.member_bars.len();
    let n_tiles = state.internal.ncols();
    let demand_seq: Vec<&Array2<f64>> = state.demand_seq.iter().collect();
    let demand_len = demand_seq.len();

    let mut mapping_sq = 0.0;
    let mut rho = vec![0.0; n_members];
    let mut grad = vec![0.0; n_members];
    for &i in &state.associated.clone() {
        for f in 0..n_tiles {
            for (m, r) in rho.iter_mut().enumerate() {
                *r = state.weights.bs[m][[i, f]];
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            for s in 0..window {
                // Align windows from the most recent entry backwards.
                let d = demand_seq[demand_len - 1 - s][[i, f]];
                if d <= 0.0 {
                    continue;
                }
                let mut mix = 0.0;
                for m in 0..n_members {
                    let bar = &state.member_bars[m][state.member_bars[m].len() - 1 - s];
                    mix += rho[m] * bar[[i, f]];
                }
                let slope = cell_hit_grad(mix.clamp(0.0, 1.0), d, floor);
                for (m, g) in grad.iter_mut().enumerate() {
                    let bar = &state.member_bars[m][state.member_bars[m].len() - 1 - s];
                    *g += slope * bar[[i, f]];
                }
            }
            let inv = 1.0 / window as f64;
            let stepped: Vec<f64> = (0..n_members).map(|m| rho[m] + rate * grad[m] * inv).collect();
            let projected = project_probability_simplex(&stepped)?;
            for m in 0..n_members {
                let diff = (projected[m] - rho[m]) / rate;
                mapping_sq += diff * diff;
                state.weights.bs[m][[i, f]] = projected[m];
            }
        }
    }
    Ok(mapping_sq)
}

/// User-weight ascent on the windowed estimate of the row-mixed strategy's
/// hit across the BS's associated users.
fn update_user_weights(state: &mut BsState, cfg: &OptimizerConfig) -> Result<f64> {
    let window = state.temporal_seq.len().min(state.demand_seq.len());
    if window == 0 {
        return Ok(0.0);
    }
    let rate = cfg.user_rate();
    let floor = cfg.mse_floor;
    let associated = state.associated.clone();
    let n_tiles = state.internal.ncols();
    let temporal_seq: Vec<&Array2<f64>> = state.temporal_seq.iter().collect();
    let demand_seq: Vec<&Array2<f64>> = state.demand_seq.iter().collect();
    let t_len = temporal_seq.len();
    let d_len = demand_seq.len();

    let mut mapping_sq = 0.0;
    for f in 0..n_tiles {
        let upsilon: Vec<f64> = associated.iter().map(|&i| state.weights.user[[i, f]]).collect();
        let mut grad = vec![0.0; associated.len()];
        for s in 0..window {
            let tilde = temporal_seq[t_len - 1 - s];
            let demand = demand_seq[d_len - 1 - s];
            let mix: f64 = associated
                .iter()
                .zip(upsilon.iter())
                .map(|(&i, &w)| w * tilde[[i, f]])
                .sum();
            let coeff: f64 = associated
                .iter()
                .map(|&i| {
                    let d = demand[[i, f]];
                    if d > 0.0 {
                        cell_hit_grad(mix.clamp(0.0, 1.0), d, floor)
                    } else {
                        0.0
                    }
                })
                .sum();
            for (k, &i) in associated.iter().enumerate() {
                grad[k] += coeff * tilde[[i, f]];
            }
        }
        let inv = 1.0 / window as f64;
        let stepped: Vec<f64> = upsilon
            .iter()
            .zip(grad.iter())
            .map(|(&w, &g)| w + rate * g * inv)
            .collect();
        let projected = project_probability_simplex(&stepped)?;
        for (k, &i) in associated.iter().enumerate() {
            let diff = (projected[k] - upsilon[k]) / rate;
            mapping_sq += diff * diff;
            state.weights.user[[i, f]] = projected[k];
        }
    }
    Ok(mapping_sq)
}

fn assemble_record(
    state: &BsState,
    cfg: &OptimizerConfig,
    slot: usize,
    realized_hit: f64,
    infeasible: bool,
    topology: &Topology,
) -> Result<MetricsRecord> {
    let floor = cfg.mse_floor;
    let (n_users, n_tiles) = state.internal.dim();
    let window: Vec<&Array2<f64>> = state.demand_seq.iter().collect();
    let online: Vec<f64> = state.online_hits.iter().copied().collect();
    let hindsight = hindsight_value(&window, state.budget, floor)?;
    let regret = hindsight - online.iter().sum::<f64>();

    // Windowed transferability estimates feeding the bound diagnostic.
    let est_member: Vec<f64> = state
        .member_bars
        .iter()
        .map(|bars| {
            let w = bars.len().min(window.len());
            if w == 0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for s in 0..w {
                let bar = &bars[bars.len() - 1 - s];
                let d = window[window.len() - 1 - s];
                acc += cache_hit_values(bar, d, floor).unwrap_or(0.0);
            }
            acc / w as f64
        })
        .collect();
    let bs_means = state.weights.bs_member_means();
    let disp = if est_member.len() > 1 {
        metrics::disparity(&bs_means[1..], &est_member[1..], est_member[0])
    } else {
        0.0
    };

    let mut user_hits = vec![0.0; state.associated.len()];
    let w_user = state.temporal_seq.len().min(window.len());
    if w_user > 0 {
        for s in 0..w_user {
            let tilde = &state.temporal_seq[state.temporal_seq.len() - 1 - s];
            let d = window[window.len() - 1 - s];
            for (k, &i) in state.associated.iter().enumerate() {
                for f in 0..n_tiles {
                    user_hits[k] += cell_hit(tilde[[i, f]], d[[i, f]], floor);
                }
            }
        }
        for h in &mut user_hits {
            *h /= w_user as f64;
        }
    }
    let upsilon_means: Vec<f64> = state
        .associated
        .iter()
        .map(|&i| state.weights.user.row(i).mean().unwrap_or(0.0))
        .collect();
    let mean_user_hit = if user_hits.is_empty() {
        0.0
    } else {
        user_hits.iter().sum::<f64>() / user_hits.len() as f64
    };
    let div = metrics::divergence(&upsilon_means, &user_hits, mean_user_hit);

    let sigma_means = state.weights.temporal_slot_means();
    let tilde_now = temporal_combine(&state.history, &state.weights.temporal)?;
    let q_now: f64 = window
        .iter()
        .map(|d| cache_hit_values(&tilde_now, d, floor).unwrap_or(0.0))
        .sum::<f64>()
        / window.len().max(1) as f64;
    let deltas: Vec<f64> = state
        .temporal_seq
        .iter()
        .zip(window.iter().rev().take(state.temporal_seq.len()).rev())
        .map(|(tilde, d)| q_now - cache_hit_values(tilde, d, floor).unwrap_or(0.0))
        .collect();
    let var = if deltas.is_empty() {
        0.0
    } else {
        metrics::variance_window(&sigma_means[sigma_means.len() - deltas.len()..], &deltas)?
    };

    let c_max = max_cache_hit(n_users, n_tiles, floor);
    let pac = metrics::pac_error_term(
        &sigma_means,
        cfg.tau,
        cfg.azuma_delta,
        c_max,
        disp,
        div,
        var,
        regret,
    )?;

    let neighbor_count = topology.neighbors[state.bs].len() as u64;
    let bits_per_entry = match cfg.quantize {
        Quantization::Sign => 1,
        Quantization::Full => 32,
    };
    let grad_bits = neighbor_count * (n_users * n_tiles) as u64 * bits_per_entry;

    Ok(MetricsRecord {
        slot,
        bs: state.bs,
        cache_hit: realized_hit,
        avg_delay: 0.0,
        regret,
        pac_error: pac,
        loss: regret,
        grad_bits_sent: grad_bits,
        infeasible,
    })
}
