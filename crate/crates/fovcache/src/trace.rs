//! Demand generation: mapping head orientations to tile-overlap vectors,
//! bucketing head-tracking logs into per-slot demand matrices, and a seeded
//! synthetic generator for correlated, drifting request streams.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::TileGrid;

/// One head-orientation sample of a trace file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadSample {
    pub user: usize,
    pub timestamp: f64,
    /// Degrees in `[-180, 180)`.
    pub yaw: f64,
    /// Degrees in `[-90, 90]`.
    pub pitch: f64,
}

/// Configuration of the synthetic demand stream: a focal viewport performs a
/// seeded random walk over the tile grid; each user either follows it or
/// looks somewhere uniformly random, independently per slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticTraceConfig {
    pub n_users: usize,
    pub n_slots: usize,
    pub grid: TileGrid,
    /// Probability that a user copies the group focal point in a slot.
    pub correlation: f64,
    /// Expected focal-point moves per slot, in tile steps.
    pub drift_rate: f64,
    pub seed: u64,
    /// Threshold overlaps at > 0 instead of emitting graded fractions.
    #[serde(default)]
    pub binary: bool,
}

impl SyntheticTraceConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.n_users == 0 || self.n_slots == 0 {
            return Err(Error::InvalidConfig("synthetic trace needs users and slots".into()));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::InvalidConfig(format!("correlation {} outside [0,1]", self.correlation)));
        }
        if self.drift_rate < 0.0 {
            return Err(Error::InvalidConfig("drift rate must be nonnegative".into()));
        }
        Ok(())
    }
}

fn wrap_yaw(mut yaw: f64) -> f64 {
    while yaw < -180.0 {
        yaw += 360.0;
    }
    while yaw >= 180.0 {
        yaw -= 360.0;
    }
    yaw
}

/// Overlap length of `[lo, hi]` with `[a, b]`.
fn overlap_1d(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

/// Per-tile fraction of the tile's area covered by the viewport rectangle
/// centered at `(yaw, pitch)`, with horizontal wrap-around at ±180° and
/// vertical clipping at the poles. Row-major tile order.
pub fn orientation_to_tiles(yaw: f64, pitch: f64, grid: &TileGrid) -> Vec<f64> {
    let yaw = wrap_yaw(yaw);
    let half_w = grid.fov_width_deg / 2.0;
    let (v_lo, v_hi) = vertical_span(pitch, grid);

    // Horizontal span as one or two intervals in [-180, 180).
    let mut spans: Vec<(f64, f64)> = Vec::with_capacity(2);
    if grid.fov_width_deg >= 360.0 {
        spans.push((-180.0, 180.0));
    } else {
        let lo = yaw - half_w;
        let hi = yaw + half_w;
        if lo < -180.0 {
            spans.push((-180.0, hi));
            spans.push((lo + 360.0, 180.0));
        } else if hi > 180.0 {
            spans.push((lo, 180.0));
            spans.push((-180.0, hi - 360.0));
        } else {
            spans.push((lo, hi));
        }
    }

    let tw = grid.tile_width_deg();
    let th = grid.tile_height_deg();
    let tile_area = grid.tile_area();
    let mut out = vec![0.0; grid.n_tiles()];
    for row in 0..grid.n_rows {
        let t_lo = -90.0 + row as f64 * th;
        let t_hi = t_lo + th;
        let v_ov = overlap_1d(v_lo, v_hi, t_lo, t_hi);
        if v_ov <= 0.0 {
            continue;
        }
        for col in 0..grid.n_cols {
            let c_lo = -180.0 + col as f64 * tw;
            let c_hi = c_lo + tw;
            let h_ov: f64 = spans.iter().map(|&(a, b)| overlap_1d(a, b, c_lo, c_hi)).sum();
            if h_ov > 0.0 {
                out[row * grid.n_cols + col] = (h_ov * v_ov / tile_area).min(1.0);
            }
        }
    }
    out
}

/// Latitude interval seen from a viewport centered at `pitch`. A viewport
/// height of 180° sees pole to pole regardless of the center; otherwise the
/// rectangle clips at the poles.
fn vertical_span(pitch: f64, grid: &TileGrid) -> (f64, f64) {
    if grid.fov_height_deg >= 180.0 {
        return (-90.0, 90.0);
    }
    let half_h = grid.fov_height_deg / 2.0;
    ((pitch - half_h).max(-90.0), (pitch + half_h).min(90.0))
}

/// Viewport area actually representable on the grid for a center at `pitch`:
/// the width times the vertically clipped height.
pub fn effective_fov_area(pitch: f64, grid: &TileGrid) -> f64 {
    let (lo, hi) = vertical_span(pitch, grid);
    grid.fov_width_deg.min(360.0) * (hi - lo).max(0.0)
}

/// Parses a normalized head-trace CSV (`user,timestamp,yaw,pitch` header,
/// decimal degrees) into samples sorted by user.
pub fn parse_head_trace<R: Read>(reader: R) -> Result<Vec<HeadSample>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = rdr.headers()?;
        let expect = ["user", "timestamp", "yaw", "pitch"];
        let got: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
        if got != expect {
            return Err(Error::TraceParse {
                line: 1,
                detail: format!("expected header user,timestamp,yaw,pitch, found {}", got.join(",")),
            });
        }
    }
    let mut samples = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| Error::TraceParse { line, detail: e.to_string() })?;
        if record.len() != 4 {
            return Err(Error::TraceParse { line, detail: format!("expected 4 fields, found {}", record.len()) });
        }
        let field = |i: usize, name: &str| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::TraceParse { line, detail: format!("bad {name}: {e}") })
        };
        let user = record[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::TraceParse { line, detail: format!("bad user: {e}") })?;
        let timestamp = field(1, "timestamp")?;
        let yaw = field(2, "yaw")?;
        let pitch = field(3, "pitch")?;
        if !(-90.0 - 1e-9..=90.0 + 1e-9).contains(&pitch) {
            return Err(Error::TraceParse { line, detail: format!("pitch {pitch} outside [-90, 90]") });
        }
        if timestamp < 0.0 {
            return Err(Error::TraceParse { line, detail: format!("negative timestamp {timestamp}") });
        }
        samples.push(HeadSample { user, timestamp, yaw: wrap_yaw(yaw), pitch: pitch.clamp(-90.0, 90.0) });
    }
    if samples.is_empty() {
        return Err(Error::EmptyTrace("no data rows".into()));
    }
    Ok(samples)
}

/// Loads a head trace and buckets it into per-slot demand matrices. Users are
/// remapped to dense indices in ascending id order; a user's demand in a slot
/// is the mean tile-overlap vector over the slot's samples.
pub fn load_head_trace(path: &Path, slot_duration: f64, grid: &TileGrid) -> Result<Vec<Array2<f64>>> {
    if slot_duration <= 0.0 {
        return Err(Error::InvalidArgument("slot duration must be positive".into()));
    }
    let file = std::fs::File::open(path)?;
    let samples = parse_head_trace(file)?;
    trace_to_slots(&samples, slot_duration, grid, false)
}

/// [`load_head_trace`] on already-parsed samples; `binary` thresholds
/// overlaps at > 0.
pub fn trace_to_slots(
    samples: &[HeadSample],
    slot_duration: f64,
    grid: &TileGrid,
    binary: bool,
) -> Result<Vec<Array2<f64>>> {
    let mut ids: Vec<usize> = samples.iter().map(|s| s.user).collect();
    ids.sort_unstable();
    ids.dedup();
    let index_of = |u: usize| ids.binary_search(&u).expect("known id");
    let n_users = ids.len();
    let max_ts = samples.iter().map(|s| s.timestamp).fold(0.0, f64::max);
    let n_slots = ((max_ts / slot_duration).floor() as usize) + 1;
    let f = grid.n_tiles();

    let mut sums = vec![Array2::<f64>::zeros((n_users, f)); n_slots];
    let mut counts = vec![vec![0usize; n_users]; n_slots];
    for s in samples {
        let slot = ((s.timestamp / slot_duration).floor() as usize).min(n_slots - 1);
        let u = index_of(s.user);
        let tiles = orientation_to_tiles(s.yaw, s.pitch, grid);
        for (t, v) in tiles.iter().enumerate() {
            sums[slot][[u, t]] += v;
        }
        counts[slot][u] += 1;
    }
    for (slot, m) in sums.iter_mut().enumerate() {
        for u in 0..n_users {
            let c = counts[slot][u];
            if c > 0 {
                let inv = 1.0 / c as f64;
                for t in 0..f {
                    m[[u, t]] *= inv;
                    if binary && m[[u, t]] > 0.0 {
                        m[[u, t]] = 1.0;
                    }
                }
            }
        }
    }
    Ok(sums)
}

/// Synthetic per-slot demand stream, bit-reproducible per seed.
pub fn synthetic_trace(cfg: &SyntheticTraceConfig) -> Result<Vec<Array2<f64>>> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let grid = &cfg.grid;
    let tw = grid.tile_width_deg();
    let th = grid.tile_height_deg();
    let half_h = grid.fov_height_deg / 2.0;
    let pitch_limit = (90.0 - half_h).max(0.0);

    // Focal point starts at a random tile center.
    let mut focal_col = rng.gen_range(0..grid.n_cols) as i64;
    let mut focal_row = rng.gen_range(0..grid.n_rows) as i64;
    let center_of = |col: i64, row: i64| -> (f64, f64) {
        let yaw = -180.0 + (col as f64 + 0.5) * tw;
        let pitch = (-90.0 + (row as f64 + 0.5) * th).clamp(-pitch_limit, pitch_limit);
        (yaw, pitch)
    };

    let mut slots = Vec::with_capacity(cfg.n_slots);
    let whole_steps = cfg.drift_rate.floor() as usize;
    let frac_step = cfg.drift_rate - whole_steps as f64;
    for _ in 0..cfg.n_slots {
        let mut steps = whole_steps;
        if rng.gen::<f64>() < frac_step {
            steps += 1;
        }
        for _ in 0..steps {
            if rng.gen::<bool>() {
                focal_col = (focal_col + if rng.gen::<bool>() { 1 } else { -1 }).rem_euclid(grid.n_cols as i64);
            } else {
                focal_row = (focal_row + if rng.gen::<bool>() { 1 } else { -1 }).clamp(0, grid.n_rows as i64 - 1);
            }
        }
        let (fy, fp) = center_of(focal_col, focal_row);
        let mut m = Array2::<f64>::zeros((cfg.n_users, grid.n_tiles()));
        for u in 0..cfg.n_users {
            let (yaw, pitch) = if rng.gen::<f64>() < cfg.correlation {
                (fy, fp)
            } else {
                (rng.gen_range(-180.0..180.0), rng.gen_range(-pitch_limit..=pitch_limit))
            };
            let tiles = orientation_to_tiles(yaw, pitch, grid);
            for (t, v) in tiles.iter().enumerate() {
                m[[u, t]] = if cfg.binary {
                    if *v > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    *v
                };
            }
        }
        slots.push(m);
    }
    Ok(slots)
}

/// Raw formats accepted by the trace converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawTraceFormat {
    /// `user,timestamp,qx,qy,qz,qw`: unit quaternions, y-up / -z-forward.
    Dataset1,
    /// `user,timestamp,yaw,pitch,roll`: Euler angles in degrees.
    Dataset2,
}

/// Converts a quaternion (y-up, forward = -z) to yaw/pitch degrees.
fn quaternion_to_yaw_pitch(qx: f64, qy: f64, qz: f64, qw: f64) -> (f64, f64) {
    // Rotate the forward vector (0, 0, -1) by the quaternion.
    let (x, y, z, w) = (qx, qy, qz, qw);
    let fx = -(2.0 * (x * z + w * y));
    let fy = -(2.0 * (y * z - w * x));
    let fz = -(1.0 - 2.0 * (x * x + y * y));
    let yaw = fx.atan2(-fz).to_degrees();
    let pitch = fy.clamp(-1.0, 1.0).asin().to_degrees();
    (wrap_yaw(yaw), pitch.clamp(-90.0, 90.0))
}

/// Converts a raw dataset export into the normalized
/// `user,timestamp,yaw,pitch` CSV schema.
pub fn convert_raw_trace<R: Read, W: std::io::Write>(
    reader: R,
    writer: W,
    format: RawTraceFormat,
) -> Result<usize> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["user", "timestamp", "yaw", "pitch"])?;
    let mut rows = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| Error::TraceParse { line, detail: e.to_string() })?;
        let need = match format {
            RawTraceFormat::Dataset1 => 6,
            RawTraceFormat::Dataset2 => 5,
        };
        if record.len() != need {
            return Err(Error::TraceParse {
                line,
                detail: format!("expected {need} fields, found {}", record.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::TraceParse { line, detail: format!("bad field {i}: {e}") })
        };
        let user = record[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::TraceParse { line, detail: format!("bad user: {e}") })?;
        let ts = num(1)?;
        let (yaw, pitch) = match format {
            RawTraceFormat::Dataset1 => quaternion_to_yaw_pitch(num(2)?, num(3)?, num(4)?, num(5)?),
            RawTraceFormat::Dataset2 => (wrap_yaw(num(2)?), num(3)?.clamp(-90.0, 90.0)),
        };
        wtr.write_record(&[
            user.to_string(),
            format!("{ts}"),
            format!("{yaw:.6}"),
            format!("{pitch:.6}"),
        ])?;
        rows += 1;
    }
    wtr.flush()?;
    if rows == 0 {
        return Err(Error::EmptyTrace("no data rows in raw trace".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid_6x4() -> TileGrid {
        TileGrid::new(6, 4, 100.0, 100.0).unwrap()
    }

    #[test]
    fn center_fov_hits_eight_tiles_binary() {
        let g = grid_6x4();
        let tiles = orientation_to_tiles(0.0, 0.0, &g);
        let hit: Vec<usize> = tiles
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
            .collect();
        // Columns {2,3} x all 4 rows.
        let expect: Vec<usize> = (0..4).flat_map(|r| [r * 6 + 2, r * 6 + 3]).collect();
        assert_eq!(hit, expect);
    }

    #[test]
    fn full_sphere_fov_covers_everything() {
        let g = TileGrid::new(5, 3, 360.0, 180.0).unwrap();
        let tiles = orientation_to_tiles(37.0, 10.0, &g);
        for v in tiles {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn wraparound_touches_both_edges() {
        let g = TileGrid::new(6, 4, 40.0, 40.0).unwrap();
        let tiles = orientation_to_tiles(179.0, 0.0, &g);
        let first_col: f64 = (0..4).map(|r| tiles[r * 6]).sum();
        let last_col: f64 = (0..4).map(|r| tiles[r * 6 + 5]).sum();
        assert!(first_col > 0.0, "wrapped portion missing");
        assert!(last_col > 0.0, "primary portion missing");
    }

    /// Brute-force rectangle intersection on a fine sampling grid.
    fn sampled_fraction(yaw: f64, pitch: f64, grid: &TileGrid, tile: usize) -> f64 {
        let row = tile / grid.n_cols;
        let col = tile % grid.n_cols;
        let tw = grid.tile_width_deg();
        let th = grid.tile_height_deg();
        let x0 = -180.0 + col as f64 * tw;
        let y0 = -90.0 + row as f64 * th;
        let n = 400;
        let mut inside = 0usize;
        for i in 0..n {
            for j in 0..n {
                let x = x0 + (i as f64 + 0.5) / n as f64 * tw;
                let y = y0 + (j as f64 + 0.5) / n as f64 * th;
                let mut dx = (x - yaw).abs();
                if dx > 180.0 {
                    dx = 360.0 - dx;
                }
                if dx <= grid.fov_width_deg / 2.0 && (y - pitch).abs() <= grid.fov_height_deg / 2.0 {
                    inside += 1;
                }
            }
        }
        inside as f64 / (n * n) as f64
    }

    #[test]
    fn fractions_match_sampled_rectangle_intersection() {
        let g = grid_6x4();
        for &(yaw, pitch) in &[(0.0, 0.0), (179.0, 10.0), (-150.0, -30.0), (33.3, 12.7)] {
            let tiles = orientation_to_tiles(yaw, pitch, &g);
            for (t, &v) in tiles.iter().enumerate() {
                let approx = sampled_fraction(yaw, pitch, &g, t);
                assert!(
                    (v - approx).abs() < 5e-3,
                    "tile {t} at ({yaw},{pitch}): exact {v} vs sampled {approx}"
                );
            }
        }
    }

    #[test]
    fn area_conservation_including_wraparound() {
        let g = grid_6x4();
        let tile_area = g.tile_area();
        for &(yaw, pitch) in &[(0.0, 0.0), (179.5, 20.0), (-179.9, -30.0), (120.0, 39.9), (45.0, 88.0)] {
            let tiles = orientation_to_tiles(yaw, pitch, &g);
            let covered: f64 = tiles.iter().map(|f| f * tile_area).sum();
            let expect = effective_fov_area(pitch, &g);
            assert_abs_diff_eq!(covered, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn parse_rejects_malformed_row_with_line_number() {
        let csv = "user,timestamp,yaw,pitch\n0,0.0,10.0,5.0\n0,0.1,not_a_number,5.0\n";
        let err = parse_head_trace(csv.as_bytes()).unwrap_err();
        match err {
            Error::TraceParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn parse_rejects_empty_file() {
        let csv = "user,timestamp,yaw,pitch\n";
        assert!(matches!(parse_head_trace(csv.as_bytes()), Err(Error::EmptyTrace(_))));
    }

    #[test]
    fn single_sample_equals_orientation_vector() {
        let g = grid_6x4();
        let samples = vec![HeadSample { user: 0, timestamp: 0.0, yaw: 0.0, pitch: 0.0 }];
        let slots = trace_to_slots(&samples, 1.0, &g, false).unwrap();
        assert_eq!(slots.len(), 1);
        let expect = orientation_to_tiles(0.0, 0.0, &g);
        for (t, &v) in expect.iter().enumerate() {
            assert_abs_diff_eq!(slots[0][[0, t]], v, epsilon = 1e-12);
        }
    }

    #[test]
    fn thirty_hz_minute_trace_buckets_into_sixty_slots() {
        let g = grid_6x4();
        let samples: Vec<HeadSample> = (0..1800)
            .map(|k| HeadSample { user: 3, timestamp: k as f64 / 30.0, yaw: 0.0, pitch: 0.0 })
            .collect();
        let slots = trace_to_slots(&samples, 1.0, &g, false).unwrap();
        assert_eq!(slots.len(), 60);
    }

    #[test]
    fn two_samples_in_slot_average() {
        let g = grid_6x4();
        let samples = vec![
            HeadSample { user: 0, timestamp: 0.0, yaw: 0.0, pitch: 0.0 },
            HeadSample { user: 0, timestamp: 0.5, yaw: 90.0, pitch: 0.0 },
        ];
        let slots = trace_to_slots(&samples, 1.0, &g, false).unwrap();
        let a = orientation_to_tiles(0.0, 0.0, &g);
        let b = orientation_to_tiles(90.0, 0.0, &g);
        for t in 0..g.n_tiles() {
            assert_abs_diff_eq!(slots[0][[0, t]], (a[t] + b[t]) / 2.0, epsilon = 1e-12);
        }
    }

    fn synth_cfg(correlation: f64, seed: u64) -> SyntheticTraceConfig {
        SyntheticTraceConfig {
            n_users: 4,
            n_slots: 50,
            grid: grid_6x4(),
            correlation,
            drift_rate: 0.1,
            seed,
            binary: false,
        }
    }

    #[test]
    fn synthetic_reproducible_per_seed() {
        let a = synthetic_trace(&synth_cfg(0.7, 42)).unwrap();
        let b = synthetic_trace(&synth_cfg(0.7, 42)).unwrap();
        assert_eq!(a, b);
        let c = synthetic_trace(&synth_cfg(0.7, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_full_correlation_all_rows_identical() {
        let slots = synthetic_trace(&synth_cfg(1.0, 9)).unwrap();
        for m in &slots {
            let first = m.row(0).to_vec();
            for u in 1..m.nrows() {
                assert_eq!(m.row(u).to_vec(), first);
            }
        }
    }

    #[test]
    fn synthetic_zero_drift_full_correlation_is_stationary() {
        let mut cfg = synth_cfg(1.0, 5);
        cfg.drift_rate = 0.0;
        let slots = synthetic_trace(&cfg).unwrap();
        for m in &slots[1..] {
            assert_eq!(m, &slots[0]);
        }
    }

    #[test]
    fn synthetic_uncorrelated_rows_decorrelate() {
        let mut cfg = synth_cfg(0.0, 21);
        cfg.n_slots = 10_000;
        cfg.n_users = 2;
        let slots = synthetic_trace(&cfg).unwrap();
        // Pearson correlation between the two users' first-tile series.
        let xs: Vec<f64> = slots.iter().map(|m| m[[0, 0]]).collect();
        let ys: Vec<f64> = slots.iter().map(|m| m[[1, 0]]).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
        let vx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>() / n;
        let vy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>() / n;
        let r = cov / (vx * vy).sqrt();
        assert!(r.abs() < 0.05, "correlation {r}");
    }

    #[test]
    fn quaternion_identity_faces_forward() {
        let (yaw, pitch) = quaternion_to_yaw_pitch(0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(yaw, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pitch, 0.0, epsilon = 1e-9);
        // 90° yaw about the vertical axis.
        let s = (0.25f64 * std::f64::consts::PI).sin();
        let c = (0.25f64 * std::f64::consts::PI).cos();
        let (yaw, _) = quaternion_to_yaw_pitch(0.0, s, 0.0, c);
        assert_abs_diff_eq!(yaw.abs(), 90.0, epsilon = 1e-6);
    }

    #[test]
    fn convert_dataset2_passthrough() {
        let raw = "user,timestamp,yaw,pitch,roll\n0,0.0,10.0,5.0,1.0\n1,0.0,-190.0,2.0,0.0\n";
        let mut out = Vec::new();
        let rows = convert_raw_trace(raw.as_bytes(), &mut out, RawTraceFormat::Dataset2).unwrap();
        assert_eq!(rows, 2);
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("user,timestamp,yaw,pitch\n"));
        // -190 wraps to 170.
        assert!(text.contains("170.000000"), "{text}");
        let parsed = parse_head_trace(text.as_bytes()).unwrap();
        assert_eq!(parsed.len(), 2);
    }

    #[test]
    fn convert_dataset1_quaternions() {
        let raw = "user,timestamp,qx,qy,qz,qw\n0,0.0,0,0,0,1\n0,0.033,0,0,0,1\n";
        let mut out = Vec::new();
        let rows = convert_raw_trace(raw.as_bytes(), &mut out, RawTraceFormat::Dataset1).unwrap();
        assert_eq!(rows, 2);
        let parsed = parse_head_trace(out.as_slice()).unwrap();
        assert_abs_diff_eq!(parsed[0].yaw, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(parsed[0].pitch, 0.0, epsilon = 1e-6);
    }
}
