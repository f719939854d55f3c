//! Slot-level wireless model: Rayleigh fading draws, multicast/unicast
//! delivery groups, SINR rates, and the rendering/transmission/fetch delay
//! decomposition feeding the delay-aware constraint.

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Topology;

/// Delay-model parameters, uniform across (BS, user, tile) triples.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DelayParams {
    /// GPU cycles needed to process one bit.
    pub cycles_per_bit: f64,
    /// GPU execution capability in cycles per second.
    pub gpu_freq: f64,
    /// Size of one tile's content in bits.
    pub content_bits: f64,
    /// Compression ratio applied before downlink transmission (>= 1).
    pub compression: f64,
    /// Server fetch rate in bits per second for cache misses.
    pub fetch_rate: f64,
    /// Per-(user, tile) interaction latency requirement in seconds.
    pub threshold: f64,
}

impl DelayParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cycles_per_bit", self.cycles_per_bit),
            ("gpu_freq", self.gpu_freq),
            ("content_bits", self.content_bits),
            ("fetch_rate", self.fetch_rate),
            ("threshold", self.threshold),
        ] {
            if v <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.compression < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "compression must be >= 1, got {}",
                self.compression
            )));
        }
        Ok(())
    }
}

impl Default for DelayParams {
    fn default() -> Self {
        Self {
            cycles_per_bit: 1.0e7,
            gpu_freq: 1.0e9,
            content_bits: 2.0e4,
            compression: 2.0,
            fetch_rate: 2.0e5,
            threshold: 0.06,
        }
    }
}

/// Requested (user, tile) pairs of one BS grouped for delivery: tiles wanted
/// by two or more users form a multicast group, the rest go out unicast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryGroups {
    pub multicast: Vec<(usize, Vec<usize>)>,
    pub unicast: Vec<(usize, usize)>,
}

impl DeliveryGroups {
    pub fn n_streams(&self) -> usize {
        self.multicast.len() + self.unicast.len()
    }

    /// All (user, tile) pairs covered, in deterministic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (tile, users) in &self.multicast {
            for &u in users {
                out.push((u, *tile));
            }
        }
        for &(tile, user) in &self.unicast {
            out.push((user, tile));
        }
        out
    }
}

/// Groups a BS's demanded pairs by tile. `threshold` is the binary-demand
/// cutoff deciding whether a pair is requested at all.
pub fn group_users(demands: &Array2<f64>, threshold: f64) -> DeliveryGroups {
    let (n_users, n_tiles) = demands.dim();
    let mut multicast = Vec::new();
    let mut unicast = Vec::new();
    for tile in 0..n_tiles {
        let wanters: Vec<usize> = (0..n_users).filter(|&u| demands[[u, tile]] > threshold).collect();
        match wanters.len() {
            0 => {}
            1 => unicast.push((tile, wanters[0])),
            _ => multicast.push((tile, wanters)),
        }
    }
    DeliveryGroups { multicast, unicast }
}

/// Delivery plan where every requested pair is served by its own unicast
/// stream (no FoV grouping).
pub fn unicast_only(demands: &Array2<f64>, threshold: f64) -> DeliveryGroups {
    let (n_users, n_tiles) = demands.dim();
    let mut unicast = Vec::new();
    for tile in 0..n_tiles {
        for u in 0..n_users {
            if demands[[u, tile]] > threshold {
                unicast.push((tile, u));
            }
        }
    }
    DeliveryGroups { multicast: Vec::new(), unicast }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Multicast,
    Unicast,
}

/// One beamformed transmission at a BS.
#[derive(Debug, Clone)]
pub struct Stream {
    pub bs: usize,
    pub kind: StreamKind,
    pub tile: usize,
    pub members: Vec<usize>,
}

/// Fading and beamformers for one slot. Channel vectors are i.i.d. complex
/// Gaussian with unit variance per complex entry; beamformers are
/// maximum-ratio transmission toward the group centroid, normalized to unit
/// power.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub antennas: usize,
    pub streams: Vec<Stream>,
    /// `fading[s][u]`: channel vector between stream `s`'s BS and user `u`.
    pub fading: Vec<Vec<Vec<Complex64>>>,
    /// Unit-power beamformer per stream.
    pub beamformers: Vec<Vec<Complex64>>,
    pub noise_power: Vec<f64>,
}

/// Draws one slot's channel realization, deterministic per seed.
pub fn sample_channel(
    seed: u64,
    topology: &Topology,
    groups: &[DeliveryGroups],
    antennas: usize,
) -> Result<ChannelRealization> {
    sample_channel_with_noise(seed, topology, groups, antennas, 1.0, 1.0, 0)
}

/// [`sample_channel`] with explicit noise power and a cross-link gain: fading
/// amplitudes between a user and any BS other than its serving one are scaled
/// by `sqrt(cross_gain)`.
#[allow(clippy::too_many_arguments)]
pub fn sample_channel_with_noise(
    seed: u64,
    topology: &Topology,
    groups: &[DeliveryGroups],
    antennas: usize,
    noise_power: f64,
    cross_gain: f64,
    slot: usize,
) -> Result<ChannelRealization> {
    if antennas == 0 {
        return Err(Error::InvalidArgument("need at least one antenna".into()));
    }
    if groups.len() != topology.n_bs {
        return Err(Error::DimensionMismatch("one delivery plan per BS required".into()));
    }
    if noise_power <= 0.0 {
        return Err(Error::InvalidArgument("noise power must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cross_gain) {
        return Err(Error::InvalidArgument("cross gain must lie in [0,1]".into()));
    }
    let mut streams = Vec::new();
    for (bs, g) in groups.iter().enumerate() {
        for (tile, users) in &g.multicast {
            streams.push(Stream { bs, kind: StreamKind::Multicast, tile: *tile, members: users.clone() });
        }
        for &(tile, user) in &g.unicast {
            streams.push(Stream { bs, kind: StreamKind::Unicast, tile, members: vec![user] });
        }
    }
    let assoc = topology.association.map_at(slot);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n_users = topology.n_users;
    let mut fading = Vec::with_capacity(streams.len());
    for stream in &streams {
        let mut per_user = Vec::with_capacity(n_users);
        for u in 0..n_users {
            let amp = if assoc[u] == stream.bs { 1.0 } else { cross_gain.sqrt() };
            let h: Vec<Complex64> = (0..antennas)
                .map(|_| {
                    let re: f64 = rng.sample::<f64, _>(StandardNormal) * (0.5f64).sqrt() * amp;
                    let im: f64 = rng.sample::<f64, _>(StandardNormal) * (0.5f64).sqrt() * amp;
                    Complex64::new(re, im)
                })
                .collect();
            per_user.push(h);
        }
        fading.push(per_user);
    }
    let mut beamformers = Vec::with_capacity(streams.len());
    for (s, stream) in streams.iter().enumerate() {
        let mut centroid = vec![Complex64::new(0.0, 0.0); antennas];
        for &u in &stream.members {
            for (a, c) in fading[s][u].iter().enumerate() {
                centroid[a] += c;
            }
        }
        let norm: f64 = centroid.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let v = if norm > 0.0 {
            centroid.iter().map(|c| c / norm).collect()
        } else {
            let mut e = vec![Complex64::new(0.0, 0.0); antennas];
            e[0] = Complex64::new(1.0, 0.0);
            e
        };
        beamformers.push(v);
    }
    Ok(ChannelRealization {
        antennas,
        streams,
        fading,
        beamformers,
        noise_power: vec![noise_power; n_users],
    })
}

impl ChannelRealization {
    /// Stream serving `user` at `(bs, kind, tile)`; distinguishes a missing
    /// stream from a membership mismatch.
    fn serving_stream(&self, bs: usize, kind: StreamKind, tile: usize, user: usize) -> Result<usize> {
        let mut tile_seen = false;
        for (idx, s) in self.streams.iter().enumerate() {
            if s.bs == bs && s.kind == kind && s.tile == tile {
                tile_seen = true;
                if s.members.contains(&user) {
                    return Ok(idx);
                }
            }
        }
        let what = match kind {
            StreamKind::Multicast => "multicast group",
            StreamKind::Unicast => "unicast stream",
        };
        if tile_seen {
            Err(Error::InvalidArgument(format!("user {user} not in {what} for tile {tile} at BS {bs}")))
        } else {
            Err(Error::InvalidArgument(format!("no {what} for tile {tile} at BS {bs}")))
        }
    }

    /// `|h^H v|^2` between stream `s` and user `u`.
    pub fn beamformed_power(&self, s: usize, u: usize) -> f64 {
        let h = &self.fading[s][u];
        let v = &self.beamformers[s];
        let dot: Complex64 = h.iter().zip(v.iter()).map(|(hi, vi)| hi.conj() * vi).sum();
        dot.norm_sqr()
    }

    /// Cross-BS interference received by `u` from all streams of `kind` at
    /// other BSs.
    pub fn interference(&self, serving_bs: usize, u: usize, kind: StreamKind) -> f64 {
        self.streams
            .iter()
            .enumerate()
            .filter(|(_, s)| s.bs != serving_bs && s.kind == kind)
            .map(|(idx, _)| self.beamformed_power(idx, u))
            .sum()
    }

    pub fn streams_of(&self, bs: usize) -> usize {
        self.streams.iter().filter(|s| s.bs == bs).count()
    }
}

/// Shannon spectral efficiency in bits/s/Hz for the given link budget.
pub fn sinr_rate(signal_power: f64, interference: f64, noise_power: f64) -> f64 {
    if signal_power <= 0.0 {
        return 0.0;
    }
    (1.0 + signal_power / (interference + noise_power)).log2()
}

/// Multicast spectral efficiency between `bs` and `user` for `tile`; the user
/// must belong to that multicast group.
pub fn multicast_rate(real: &ChannelRealization, bs: usize, user: usize, tile: usize) -> Result<f64> {
    let s = real.serving_stream(bs, StreamKind::Multicast, tile, user)?;
    let signal = real.beamformed_power(s, user);
    let interference = real.interference(bs, user, StreamKind::Multicast);
    Ok(sinr_rate(signal, interference, real.noise_power[user]))
}

/// Unicast spectral efficiency between `bs` and `user` for `tile`.
pub fn unicast_rate(real: &ChannelRealization, bs: usize, user: usize, tile: usize) -> Result<f64> {
    let s = real.serving_stream(bs, StreamKind::Unicast, tile, user)?;
    let signal = real.beamformed_power(s, user);
    let interference = real.interference(bs, user, StreamKind::Unicast);
    Ok(sinr_rate(signal, interference, real.noise_power[user]))
}

/// Time to render a tile at the BS.
pub fn rendering_time(p: &DelayParams) -> f64 {
    p.cycles_per_bit / p.gpu_freq
}

/// Downlink transmission time of the compressed content at `rate_bps`.
pub fn transmit_time(p: &DelayParams, rate_bps: f64) -> Result<f64> {
    if rate_bps <= 0.0 {
        return Err(Error::Outage);
    }
    Ok(p.content_bits / (p.compression * rate_bps))
}

/// Server fetch time for a cache miss.
pub fn fetch_time(p: &DelayParams) -> f64 {
    p.content_bits / (p.compression * p.fetch_rate)
}

/// Total delay for one (user, tile) pair: rendering plus transmission plus
/// the fetch time scaled by the uncached fraction.
pub fn total_delay(p: &DelayParams, rate_bps: f64, cached: f64) -> Result<f64> {
    Ok(rendering_time(p) + transmit_time(p, rate_bps)? + (1.0 - cached) * fetch_time(p))
}
