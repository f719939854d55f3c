//! Scalar and matrix quality metrics: per-tile MSE, the log-quality cache-hit
//! score, disparity/divergence/variance estimates, regret, and the
//! high-probability error term used as a run diagnostic.
//!
//! The cached value for a (user, tile) cell is modeled as `phi * d`, the
//! fraction of the demanded tile quality held in cache, so the cell MSE is
//! `d^2 (1 - phi)^2`. Cells with zero demand contribute nothing to the score
//! or its gradient.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{CachingStrategy, DemandMatrix};

/// Default floor applied to the MSE before taking the log.
pub const DEFAULT_MSE_FLOOR: f64 = 1e-6;

/// Squared error between a cached value and the demanded value.
pub fn mse(cached: f64, demanded: f64) -> f64 {
    let diff = cached - demanded;
    diff * diff
}

/// Log-quality of a cell: `log10(1 / max(mse, floor))`, clamped below at 0 so
/// the metric is total for any nonnegative MSE.
pub fn quality(mse_value: f64, floor: f64) -> f64 {
    debug_assert!(floor > 0.0);
    let clamped = mse_value.max(floor);
    (1.0 / clamped).log10().max(0.0)
}

/// Largest value `quality` can return for a given floor.
pub fn max_quality(floor: f64) -> f64 {
    (1.0 / floor).log10()
}

/// Maximum possible cache-hit score of a whole `U x F` strategy matrix.
pub fn max_cache_hit(n_users: usize, n_tiles: usize, floor: f64) -> f64 {
    (n_users * n_tiles) as f64 * max_quality(floor)
}

/// Hit contribution of a single cell under the `cached = phi * d` model.
/// Zero-demand cells contribute nothing.
pub fn cell_hit(phi: f64, demand: f64, floor: f64) -> f64 {
    if demand <= 0.0 {
        return 0.0;
    }
    phi * quality(mse(phi * demand, demand), floor)
}

/// Derivative of [`cell_hit`] with respect to `phi`.
///
/// Piecewise analytic: inside the floor region (`d^2 (1-phi)^2 <= floor`) the
/// quality factor is constant, elsewhere the log term contributes
/// `2 phi / ((1 - phi) ln 10)`.
pub fn cell_hit_grad(phi: f64, demand: f64, floor: f64) -> f64 {
    if demand <= 0.0 {
        return 0.0;
    }
    let m = mse(phi * demand, demand);
    if m <= floor {
        max_quality(floor)
    } else {
        let q = (1.0 / m).log10().max(0.0);
        let dq = 2.0 / ((1.0 - phi) * std::f64::consts::LN_10);
        q + phi * dq
    }
}

/// Cache-hit score with an externally supplied MSE realization. Linear in
/// `phi` by construction.
pub fn cache_hit_given_mse(phi: &Array2<f64>, mse_values: &Array2<f64>, floor: f64) -> Result<f64> {
    if phi.dim() != mse_values.dim() {
        return Err(Error::DimensionMismatch(format!(
            "phi {:?} vs mse {:?}",
            phi.dim(),
            mse_values.dim()
        )));
    }
    Ok(phi
        .iter()
        .zip(mse_values.iter())
        .map(|(&p, &m)| p * quality(m, floor))
        .sum())
}

/// Cache-hit score of a strategy against a demand matrix under the
/// `cached = phi * d` model. Nonnegative.
pub fn cache_hit(strategy: &CachingStrategy, demands: &DemandMatrix, floor: f64) -> Result<f64> {
    cache_hit_values(&strategy.values, &demands.values, floor)
}

/// [`cache_hit`] on raw matrices.
pub fn cache_hit_values(phi: &Array2<f64>, demands: &Array2<f64>, floor: f64) -> Result<f64> {
    if phi.dim() != demands.dim() {
        return Err(Error::DimensionMismatch(format!(
            "strategy {:?} vs demand {:?}",
            phi.dim(),
            demands.dim()
        )));
    }
    Ok(phi
        .iter()
        .zip(demands.iter())
        .map(|(&p, &d)| cell_hit(p, d, floor))
        .sum())
}

/// Elementwise gradient of [`cache_hit_values`] with respect to the strategy.
pub fn cache_hit_gradient(phi: &Array2<f64>, demands: &Array2<f64>, floor: f64) -> Result<Array2<f64>> {
    if phi.dim() != demands.dim() {
        return Err(Error::DimensionMismatch(format!(
            "strategy {:?} vs demand {:?}",
            phi.dim(),
            demands.dim()
        )));
    }
    let mut grad = Array2::zeros(phi.dim());
    for ((g, &p), &d) in grad.iter_mut().zip(phi.iter()).zip(demands.iter()) {
        *g = cell_hit_grad(p, d, floor);
    }
    Ok(grad)
}

/// Weighted gap between a BS's estimated hit and its neighbors' estimated
/// hits on the same local data.
pub fn disparity(bs_weights: &[f64], est_hit_neighbor: &[f64], est_hit_self: f64) -> f64 {
    debug_assert_eq!(bs_weights.len(), est_hit_neighbor.len());
    bs_weights
        .iter()
        .zip(est_hit_neighbor.iter())
        .map(|(&w, &e)| w * (e - est_hit_self))
        .sum()
}

/// User-level analogue of [`disparity`] over co-located users.
pub fn divergence(user_weights: &[f64], est_hit_peer_users: &[f64], est_hit_self_user: f64) -> f64 {
    disparity(user_weights, est_hit_peer_users, est_hit_self_user)
}

/// Magnitude of the temporally weighted hit drift over a window of observed
/// strategies.
pub fn variance_window(temporal_weights: &[f64], hit_deltas: &[f64]) -> Result<f64> {
    if temporal_weights.is_empty() {
        return Err(Error::InvalidArgument("variance window is empty".into()));
    }
    if temporal_weights.len() != hit_deltas.len() {
        return Err(Error::DimensionMismatch(format!(
            "weights {} vs deltas {}",
            temporal_weights.len(),
            hit_deltas.len()
        )));
    }
    Ok(temporal_weights
        .iter()
        .zip(hit_deltas.iter())
        .map(|(&w, &d)| w * d)
        .sum::<f64>()
        .abs())
}

/// Cumulative hit gap between a fixed hindsight strategy and the online
/// sequence over an aligned window.
pub fn regret(online_hits: &[f64], hindsight_hit_per_slot: &[f64]) -> f64 {
    let hind: f64 = hindsight_hit_per_slot.iter().sum();
    let online: f64 = online_hits.iter().sum();
    hind - online
}

/// Error term of the high-probability lower bound on the conditional
/// expected cache hit: an Azuma deviation term, the three transferability
/// estimates, a nonuniformity penalty on the temporal weights, and a scaled
/// regret term.
#[allow(clippy::too_many_arguments)]
pub fn pac_error_term(
    temporal_weights: &[f64],
    tau: usize,
    delta: f64,
    c_max: f64,
    disparity: f64,
    divergence: f64,
    variance: f64,
    regret: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!("confidence delta {delta} outside (0,1)")));
    }
    if tau == 0 {
        return Err(Error::InvalidArgument("tau must be >= 1".into()));
    }
    if c_max <= 0.0 {
        return Err(Error::InvalidArgument(format!("c_max {c_max} must be positive")));
    }
    let norm2 = temporal_weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let azuma = c_max * norm2 * ((2.0 / tau as f64) * (1.0 / delta).ln()).sqrt();
    let uniform_dev: f64 = temporal_weights
        .iter()
        .map(|w| (w - 1.0 / tau as f64).abs())
        .sum();
    Ok(azuma + disparity + variance + divergence + c_max * uniform_dev + 2.0 * regret / tau as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use crate::types::{CachingStrategy, DemandMatrix};

    #[test]
    fn mse_basic_cases() {
        assert_eq!(mse(1.0, 1.0), 0.0);
        assert_eq!(mse(0.5, 1.0), 0.25);
        assert_eq!(mse(0.0, 1.0), 1.0);
    }

    #[test]
    fn quality_basic_cases() {
        assert_abs_diff_eq!(quality(0.1, 1e-6), 1.0, epsilon = 1e-12);
        // Forced by clamping the MSE at the floor.
        assert_abs_diff_eq!(quality(0.0, 1e-6), 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quality(1.0, 1e-6), 0.0, epsilon = 1e-12);
        // Total for out-of-range MSE.
        assert_eq!(quality(2.0, 1e-6), 0.0);
    }

    #[test]
    fn quality_monotone_and_bounded() {
        let floor = 1e-6;
        let mut prev = f64::INFINITY;
        for k in 0..2000 {
            let m = k as f64 * 1e-3;
            let q = quality(m, floor);
            assert!(q <= max_quality(floor) + 1e-12);
            assert!(q >= 0.0);
            assert!(q <= prev + 1e-12);
            prev = q;
        }
    }

    #[test]
    fn cache_hit_empty_cache_is_zero() {
        let phi = CachingStrategy::new(Array2::zeros((2, 3)), 0, 0);
        let d = DemandMatrix::new(array![[1.0, 0.5, 0.2], [0.0, 0.3, 0.9]], 0, 0);
        assert_eq!(cache_hit(&phi, &d, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn cache_hit_given_mse_hand_sums() {
        // Single entry, full weight, MSE 0.1.
        let phi = array![[1.0]];
        let m = array![[0.1]];
        assert_abs_diff_eq!(cache_hit_given_mse(&phi, &m, 1e-6).unwrap(), 1.0, epsilon = 1e-12);

        // 2x2 hand sum verified by elementwise accumulation: 1.0 + 2.0.
        let phi = array![[1.0, 0.0], [0.0, 1.0]];
        let m = array![[0.1, 0.5], [0.5, 0.01]];
        let brute: f64 = phi
            .iter()
            .zip(m.iter())
            .map(|(&p, &mm)| p * quality(mm, 1e-6))
            .sum();
        let got = cache_hit_given_mse(&phi, &m, 1e-6).unwrap();
        assert_abs_diff_eq!(got, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(got, brute, epsilon = 1e-12);
    }

    #[test]
    fn cache_hit_dimension_mismatch_errors() {
        let phi = CachingStrategy::new(Array2::zeros((2, 3)), 0, 0);
        let d = DemandMatrix::new(Array2::zeros((2, 2)), 0, 0);
        assert!(cache_hit(&phi, &d, 1e-6).is_err());
    }

    #[test]
    fn cache_hit_given_mse_is_linear_in_phi() {
        let m = array![[0.3, 0.05], [0.9, 0.0004]];
        let p1 = array![[1.0, 0.0], [0.5, 0.25]];
        let p2 = array![[0.0, 1.0], [0.9, 0.75]];
        for &a in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let blend = &p1 * a + &p2 * (1.0 - a);
            let lhs = cache_hit_given_mse(&blend, &m, 1e-6).unwrap();
            let rhs = a * cache_hit_given_mse(&p1, &m, 1e-6).unwrap()
                + (1.0 - a) * cache_hit_given_mse(&p2, &m, 1e-6).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn disparity_cases() {
        assert_eq!(disparity(&[0.3, 0.7], &[2.0, 2.0], 2.0), 0.0);
        assert_abs_diff_eq!(disparity(&[1.0], &[2.5], 2.0), 0.5, epsilon = 1e-12);
        // Dot product checked by hand: 0.25*0.4 + 0.75*(-0.2) = -0.05.
        assert_abs_diff_eq!(
            disparity(&[0.25, 0.75], &[2.4, 1.8], 2.0),
            -0.05,
            epsilon = 1e-12
        );
    }

    #[test]
    fn divergence_cases() {
        assert_eq!(divergence(&[0.5, 0.5], &[1.0, 1.0], 1.0), 0.0);
        assert_abs_diff_eq!(divergence(&[1.0], &[1.3], 1.0), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(divergence(&[0.5, 0.5], &[1.2, 0.8], 1.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn variance_window_cases() {
        assert_eq!(variance_window(&[0.5, 0.5], &[0.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            variance_window(&[1.0, 0.0], &[-2.0, 5.0]).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            variance_window(&[0.5, 0.5], &[1.0, -1.0]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert!(variance_window(&[], &[]).is_err());
    }

    #[test]
    fn regret_cases() {
        assert_eq!(regret(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_abs_diff_eq!(regret(&[2.0, 1.0], &[3.0, 3.0]), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn pac_error_uniform_sigma_closed_form() {
        // Direct evaluation with natural log, ||sigma||_2 = 1/2.
        let sigma = [0.25; 4];
        let got = pac_error_term(&sigma, 4, 0.1, 1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let expect = 0.5 * ((2.0 / 4.0) * (1.0f64 / 0.1).ln()).sqrt();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.53650, epsilon = 1e-4);
    }

    #[test]
    fn pac_error_uniform_sigma_kills_deviation_term() {
        let tau = 5;
        let sigma = vec![1.0 / tau as f64; tau];
        // Only the Azuma term should remain with all estimates zero.
        let got = pac_error_term(&sigma, tau, 0.5, 2.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let norm2 = (tau as f64 * (1.0 / tau as f64).powi(2)).sqrt();
        let azuma = 2.0 * norm2 * ((2.0 / tau as f64) * 2.0f64.ln()).sqrt();
        assert_abs_diff_eq!(got, azuma, epsilon = 1e-12);
    }

    #[test]
    fn pac_error_delta_near_one_vanishes() {
        let sigma = [0.25; 4];
        let got = pac_error_term(&sigma, 4, 1.0 - 1e-12, 1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(got, 0.0, epsilon = 1e-5);
    }

    #[test]
    fn pac_error_rejects_bad_delta() {
        assert!(pac_error_term(&[1.0], 1, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(pac_error_term(&[1.0], 1, 1.5, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn pac_error_decreasing_in_tau_and_delta() {
        let mut prev = f64::INFINITY;
        for tau in 1..=32 {
            let sigma = vec![1.0 / tau as f64; tau];
            let v = pac_error_term(&sigma, tau, 0.1, 1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
            assert!(v < prev, "tau={tau}: {v} !< {prev}");
            prev = v;
        }
        let sigma = [0.125; 8];
        let mut prev = f64::INFINITY;
        for &delta in &[0.01, 0.05, 0.1, 0.5] {
            let v = pac_error_term(&sigma, 8, delta, 1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
            assert!(v < prev, "delta={delta}: {v} !< {prev}");
            prev = v;
        }
    }

    #[test]
    fn gradient_matches_value_slope_between_clamps() {
        let floor = 1e-6;
        let (phi, d) = (0.5, 1.0);
        let q = quality(mse(phi * d, d), floor);
        assert_abs_diff_eq!(q, (4.0f64).log10(), epsilon = 1e-12);
        let g = cell_hit_grad(phi, d, floor);
        let expect = q + 2.0 * phi / ((1.0 - phi) * std::f64::consts::LN_10);
        assert_abs_diff_eq!(g, expect, epsilon = 1e-12);
    }

    #[test]
    fn gradient_zero_demand_is_zero() {
        let phi = array![[0.3, 0.9]];
        let d = array![[0.0, 0.0]];
        let g = cache_hit_gradient(&phi, &d, 1e-6).unwrap();
        assert_eq!(g, array![[0.0, 0.0]]);
    }

    #[test]
    fn gradient_additive_over_tiles() {
        let floor = 1e-6;
        let phi = array![[0.2, 0.7]];
        let d = array![[0.9, 0.4]];
        let g = cache_hit_gradient(&phi, &d, floor).unwrap();
        assert_abs_diff_eq!(g[[0, 0]], cell_hit_grad(0.2, 0.9, floor), epsilon = 1e-15);
        assert_abs_diff_eq!(g[[0, 1]], cell_hit_grad(0.7, 0.4, floor), epsilon = 1e-15);
    }
}
