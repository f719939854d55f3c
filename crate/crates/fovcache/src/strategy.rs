//! Three-layer weighted strategy combination (temporal, co-located users,
//! neighboring BSs) and the Euclidean projections that keep strategies and
//! weight families feasible.

use ndarray::Array2;
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Weight families of one BS. All weights are nonnegative; each family lies
/// on a probability simplex per (user, tile) cell:
/// - `temporal[t][i, f]` over the window slots,
/// - `user[i, f]` over the users of the BS per tile column,
/// - `bs[m][i, f]` over the neighborhood members per cell (self first).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub temporal: Vec<Array2<f64>>,
    pub user: Array2<f64>,
    pub bs: Vec<Array2<f64>>,
    /// Neighborhood order for `bs`: the owning BS first, then its neighbors.
    pub members: Vec<usize>,
}

impl WeightSet {
    /// Uniform weights: `1/tau` per window slot, `1/|users|` over the
    /// associated users, `1/|members|` over the neighborhood.
    pub fn uniform(
        n_users: usize,
        n_tiles: usize,
        tau: usize,
        associated: &[usize],
        members: Vec<usize>,
    ) -> Self {
        let temporal = vec![Array2::from_elem((n_users, n_tiles), 1.0 / tau as f64); tau];
        let mut user = Array2::zeros((n_users, n_tiles));
        if !associated.is_empty() {
            let w = 1.0 / associated.len() as f64;
            for &i in associated {
                user.row_mut(i).fill(w);
            }
        }
        let bs = vec![Array2::from_elem((n_users, n_tiles), 1.0 / members.len() as f64); members.len()];
        Self { temporal, user, bs, members }
    }

    pub fn tau(&self) -> usize {
        self.temporal.len()
    }

    /// Mean temporal weight per window slot, collapsing the per-cell matrices.
    pub fn temporal_slot_means(&self) -> Vec<f64> {
        self.temporal.iter().map(|m| m.mean().unwrap_or(0.0)).collect()
    }

    /// Mean BS weight per neighborhood member.
    pub fn bs_member_means(&self) -> Vec<f64> {
        self.bs.iter().map(|m| m.mean().unwrap_or(0.0)).collect()
    }

    /// Checks every simplex constraint to within `tol`.
    pub fn validate(&self, associated: &[usize], tol: f64) -> Result<()> {
        let dim = self.user.dim();
        for (i, f) in ndarray::indices(dim) {
            let s: f64 = self.temporal.iter().map(|m| m[[i, f]]).sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "temporal weights at ({i},{f}) sum to {s}"
                )));
            }
            let s: f64 = self.bs.iter().map(|m| m[[i, f]]).sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!("bs weights at ({i},{f}) sum to {s}")));
            }
        }
        for f in 0..dim.1 {
            let s: f64 = associated.iter().map(|&i| self.user[[i, f]]).sum();
            if !associated.is_empty() && (s - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!("user weights at tile {f} sum to {s}")));
            }
        }
        let neg = self
            .temporal
            .iter()
            .chain(self.bs.iter())
            .chain(std::iter::once(&self.user))
            .flat_map(|m| m.iter())
            .any(|&w| w < -tol);
        if neg {
            return Err(Error::InvalidArgument("negative weight".into()));
        }
        Ok(())
    }
}

/// Ring buffer of the most recent strategies of one BS, oldest first.
#[derive(Debug, Clone)]
pub struct StrategyHistory {
    entries: VecDeque<(usize, Array2<f64>)>,
    capacity: usize,
}

impl StrategyHistory {
    pub fn new(capacity: usize) -> Self {
        Self { entries: VecDeque::with_capacity(capacity), capacity }
    }

    /// History pre-filled with `capacity` copies of an initial strategy.
    pub fn filled(capacity: usize, init: Array2<f64>) -> Self {
        let mut h = Self::new(capacity);
        for _ in 0..capacity {
            h.push(0, init.clone());
        }
        h
    }

    pub fn push(&mut self, slot: usize, strategy: Array2<f64>) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((slot, strategy));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.entries.iter().map(|(_, s)| s)
    }

    pub fn get(&self, idx: usize) -> &Array2<f64> {
        &self.entries[idx].1
    }

    pub fn latest(&self) -> Option<&Array2<f64>> {
        self.entries.back().map(|(_, s)| s)
    }
}

/// Elementwise convex combination of the stored window under the temporal
/// weights.
pub fn temporal_combine(history: &StrategyHistory, temporal: &[Array2<f64>]) -> Result<Array2<f64>> {
    if history.len() != temporal.len() {
        return Err(Error::DimensionMismatch(format!(
            "history length {} vs temporal weights {}",
            history.len(),
            temporal.len()
        )));
    }
    if history.is_empty() {
        return Err(Error::InvalidArgument("empty strategy history".into()));
    }
    let mut out: Array2<f64> = Array2::zeros(temporal[0].dim());
    for (w, s) in temporal.iter().zip(history.iter()) {
        out = out + &(w * s);
    }
    Ok(out)
}

/// Mixes user rows per tile column: every user's combined row becomes the
/// user-weighted average of the per-user rows.
pub fn user_combine(
    phi_tilde: &Array2<f64>,
    user_weights: &Array2<f64>,
    associated: &[usize],
) -> Result<Array2<f64>> {
    if phi_tilde.dim() != user_weights.dim() {
        return Err(Error::DimensionMismatch(format!(
            "strategy {:?} vs user weights {:?}",
            phi_tilde.dim(),
            user_weights.dim()
        )));
    }
    let (n_users, n_tiles) = phi_tilde.dim();
    for i in 0..n_users {
        if !associated.contains(&i) && user_weights.row(i).iter().any(|&w| w != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "user {i} carries weight but is not associated"
            )));
        }
    }
    let mut out = Array2::zeros((n_users, n_tiles));
    for f in 0..n_tiles {
        let mixed: f64 = associated
            .iter()
            .map(|&i| user_weights[[i, f]] * phi_tilde[[i, f]])
            .sum();
        for &i in associated {
            out[[i, f]] = mixed;
        }
    }
    Ok(out)
}

/// Mixes the BS's own user-combined strategy with its neighbors' under the
/// per-cell BS weights (self weight first).
pub fn bs_combine(
    phi_bar_self: &Array2<f64>,
    phi_bar_neighbors: &[&Array2<f64>],
    bs_weights: &[Array2<f64>],
) -> Result<Array2<f64>> {
    if bs_weights.len() != phi_bar_neighbors.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "bs weights {} vs members {}",
            bs_weights.len(),
            phi_bar_neighbors.len() + 1
        )));
    }
    let mut out = bs_weights[0].clone() * phi_bar_self;
    for (w, s) in bs_weights[1..].iter().zip(phi_bar_neighbors.iter()) {
        if s.dim() != out.dim() {
            return Err(Error::DimensionMismatch("neighbor strategy shape".into()));
        }
        out = out + &(w * *s);
    }
    Ok(out)
}

/// Euclidean projection onto the probability simplex `{x >= 0, sum x = 1}`.
pub fn project_probability_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("cannot project an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("simplex projection input".into()));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Euclidean projection onto the capped simplex
/// `{0 <= x <= cap elementwise, sum x <= budget}`.
///
/// If the clamped input already satisfies the budget it is returned directly;
/// otherwise the unique threshold making the mass equal the budget is found
/// exactly from the breakpoints of the piecewise-linear mass curve.
pub fn project_capped_simplex(v: &Array2<f64>, budget: f64, cap: f64) -> Result<Array2<f64>> {
    if budget <= 0.0 {
        return Err(Error::InvalidArgument(format!("budget {budget} must be positive")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("capped simplex projection input".into()));
    }
    let clamped = v.mapv(|x| x.clamp(0.0, cap));
    if clamped.sum() <= budget {
        // Feasible inputs are returned exactly.
        return Ok(if clamped == *v { v.clone() } else { clamped });
    }
    let theta = capped_threshold(v.iter().copied(), budget, cap);
    Ok(v.mapv(|x| (x - theta).clamp(0.0, cap)))
}

/// Slice variant of [`project_capped_simplex`] used by the delay projection.
fn project_capped_slice(v: &[f64], budget: f64, cap: f64) -> Vec<f64> {
    let clamped: Vec<f64> = v.iter().map(|&x| x.clamp(0.0, cap)).collect();
    if clamped.iter().sum::<f64>() <= budget {
        return clamped;
    }
    let theta = capped_threshold(v.iter().copied(), budget, cap);
    v.iter().map(|&x| (x - theta).clamp(0.0, cap)).collect()
}

/// Finds `theta >= 0` such that `sum clamp(v - theta, 0, cap) = budget`.
fn capped_threshold(values: impl Iterator<Item = f64>, budget: f64, cap: f64) -> f64 {
    let vals: Vec<f64> = values.collect();
    let mut breaks: Vec<f64> = Vec::with_capacity(vals.len() * 2 + 1);
    breaks.push(0.0);
    for &x in &vals {
        if x > 0.0 {
            breaks.push(x);
        }
        if x - cap > 0.0 {
            breaks.push(x - cap);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mass = |theta: f64| -> f64 { vals.iter().map(|&x| (x - theta).clamp(0.0, cap)).sum() };
    // mass is nonincreasing in theta; locate the segment containing the budget.
    let mut lo = 0.0;
    let mut hi = *breaks.last().unwrap();
    for w in breaks.windows(2) {
        if mass(w[1]) <= budget {
            lo = w[0];
            hi = w[1];
            break;
        }
    }
    let (m_lo, m_hi) = (mass(lo), mass(hi));
    if (m_lo - m_hi).abs() < f64::EPSILON {
        return lo;
    }
    // Linear within the segment.
    lo + (m_lo - budget) * (hi - lo) / (m_lo - m_hi)
}

/// Outcome of the delay-constrained projection.
#[derive(Debug, Clone)]
pub struct ConstrainedProjection {
    pub values: Array2<f64>,
    /// True when the capped simplex and the delay halfspace do not intersect
    /// and only the simplex projection was applied.
    pub infeasible: bool,
}

/// Projection onto the intersection of the capped simplex and the halfspace
/// `<coeffs, x> >= rhs` (coefficients nonnegative), via Dykstra's alternating
/// scheme. Emptiness is detected exactly by maximizing the linear form over
/// the capped simplex first.
pub fn project_capped_simplex_with_halfspace(
    v: &Array2<f64>,
    budget: f64,
    cap: f64,
    coeffs: &Array2<f64>,
    rhs: f64,
    max_sweeps: usize,
    tol: f64,
) -> Result<ConstrainedProjection> {
    if coeffs.dim() != v.dim() {
        return Err(Error::DimensionMismatch("halfspace coefficient shape".into()));
    }
    if coeffs.iter().any(|&c| c < 0.0) {
        return Err(Error::InvalidArgument("halfspace coefficients must be nonnegative".into()));
    }
    let norm_sq: f64 = coeffs.iter().map(|&c| c * c).sum();
    if rhs <= 0.0 || norm_sq == 0.0 {
        // Constraint inactive at the origin side; plain projection.
        return Ok(ConstrainedProjection {
            values: project_capped_simplex(v, budget, cap)?,
            infeasible: false,
        });
    }
    // Best attainable value of the linear form over the capped simplex:
    // fill the largest coefficients first until the budget is spent.
    let mut sorted: Vec<f64> = coeffs.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut remaining = budget;
    let mut best = 0.0;
    for c in sorted {
        if remaining <= 0.0 {
            break;
        }
        let take = remaining.min(cap);
        best += c * take;
        remaining -= take;
    }
    if best + 1e-12 < rhs {
        return Ok(ConstrainedProjection {
            values: project_capped_simplex(v, budget, cap)?,
            infeasible: true,
        });
    }

    let n = v.len();
    let flat: Vec<f64> = v.iter().copied().collect();
    let a: Vec<f64> = coeffs.iter().copied().collect();
    let mut x = flat.clone();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for _ in 0..max_sweeps {
        let prev = x.clone();
        // Halfspace step with correction p.
        let y: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + pi).collect();
        let dot: f64 = y.iter().zip(&a).map(|(yi, ai)| yi * ai).sum();
        let shift = if dot < rhs { (rhs - dot) / norm_sq } else { 0.0 };
        let z: Vec<f64> = y.iter().zip(&a).map(|(yi, ai)| yi + shift * ai).collect();
        for i in 0..n {
            p[i] = y[i] - z[i];
        }
        // Capped simplex step with correction q.
        let y2: Vec<f64> = z.iter().zip(&q).map(|(zi, qi)| zi + qi).collect();
        let w = project_capped_slice(&y2, budget, cap);
        for i in 0..n {
            q[i] = y2[i] - w[i];
        }
        x = w;
        let delta: f64 = x
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let dot_now: f64 = x.iter().zip(&a).map(|(xi, ai)| xi * ai).sum();
        if delta < tol && dot_now >= rhs - 1e-9 {
            break;
        }
    }
    let values = Array2::from_shape_vec(v.dim(), x).expect("shape preserved");
    Ok(ConstrainedProjection { values, infeasible: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn hist_of(strategies: Vec<Array2<f64>>) -> StrategyHistory {
        let mut h = StrategyHistory::new(strategies.len());
        for (t, s) in strategies.into_iter().enumerate() {
            h.push(t, s);
        }
        h
    }

    #[test]
    fn temporal_combine_identity_for_single_slot() {
        let s = array![[0.2, 0.8]];
        let h = hist_of(vec![s.clone()]);
        let w = vec![Array2::from_elem((1, 2), 1.0)];
        assert_eq!(temporal_combine(&h, &w).unwrap(), s);
    }

    #[test]
    fn temporal_combine_midpoint() {
        let h = hist_of(vec![array![[1.0, 0.0]], array![[0.0, 1.0]]]);
        let w = vec![Array2::from_elem((1, 2), 0.5); 2];
        assert_eq!(temporal_combine(&h, &w).unwrap(), array![[0.5, 0.5]]);
    }

    #[test]
    fn temporal_combine_degenerate_picks_latest() {
        let h = hist_of(vec![array![[1.0]], array![[0.5]], array![[0.25]]]);
        let w = vec![
            Array2::zeros((1, 1)),
            Array2::zeros((1, 1)),
            Array2::from_elem((1, 1), 1.0),
        ];
        assert_eq!(temporal_combine(&h, &w).unwrap(), array![[0.25]]);
    }

    #[test]
    fn temporal_combine_length_mismatch_errors() {
        let h = hist_of(vec![array![[1.0]]]);
        let w = vec![Array2::from_elem((1, 1), 0.5); 2];
        assert!(temporal_combine(&h, &w).is_err());
    }

    #[test]
    fn user_combine_single_user_identity() {
        let phi = array![[0.3, 0.7], [0.0, 0.0]];
        let mut w = Array2::zeros((2, 2));
        w.row_mut(0).fill(1.0);
        let out = user_combine(&phi, &w, &[0]).unwrap();
        assert_eq!(out.row(0).to_vec(), vec![0.3, 0.7]);
    }

    #[test]
    fn user_combine_uniform_two_users() {
        let phi = array![[1.0, 0.0], [0.0, 1.0]];
        let w = Array2::from_elem((2, 2), 0.5);
        let out = user_combine(&phi, &w, &[0, 1]).unwrap();
        assert_eq!(out, array![[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn user_combine_degenerate_copies_row() {
        let phi = array![[0.9, 0.1], [0.2, 0.4]];
        let mut w = Array2::zeros((2, 2));
        w.row_mut(0).fill(1.0);
        let out = user_combine(&phi, &w, &[0, 1]).unwrap();
        assert_eq!(out.row(0).to_vec(), vec![0.9, 0.1]);
        assert_eq!(out.row(1).to_vec(), vec![0.9, 0.1]);
    }

    #[test]
    fn user_combine_rejects_weight_on_foreign_user() {
        let phi = array![[0.9], [0.2]];
        let w = Array2::from_elem((2, 1), 0.5);
        assert!(user_combine(&phi, &w, &[0]).is_err());
    }

    #[test]
    fn bs_combine_self_only() {
        let own = array![[0.4, 0.6]];
        let w = vec![Array2::from_elem((1, 2), 1.0), Array2::zeros((1, 2))];
        let nbr = array![[0.9, 0.9]];
        let out = bs_combine(&own, &[&nbr], &w).unwrap();
        assert_eq!(out, own);
    }

    #[test]
    fn bs_combine_half_half() {
        let own = array![[0.2]];
        let nbr = array![[0.6]];
        let w = vec![Array2::from_elem((1, 1), 0.5); 2];
        let out = bs_combine(&own, &[&nbr], &w).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn bs_combine_three_way_dot() {
        let own = array![[1.0]];
        let n1 = array![[0.0]];
        let n2 = array![[0.4]];
        let w = vec![
            Array2::from_elem((1, 1), 0.2),
            Array2::from_elem((1, 1), 0.3),
            Array2::from_elem((1, 1), 0.5),
        ];
        let out = bs_combine(&own, &[&n1, &n2], &w).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn bs_combine_member_mismatch_errors() {
        let own = array![[1.0]];
        let w = vec![Array2::from_elem((1, 1), 1.0)];
        let nbr = array![[0.0]];
        assert!(bs_combine(&own, &[&nbr], &w).is_err());
    }

    #[test]
    fn combine_chain_identity_on_identical_inputs() {
        let s = array![[0.25, 0.5], [0.25, 0.5]];
        let tau = 3;
        let h = StrategyHistory::filled(tau, s.clone());
        let ws = WeightSet::uniform(2, 2, tau, &[0, 1], vec![0, 1]);
        let tilde = temporal_combine(&h, &ws.temporal).unwrap();
        let bar = user_combine(&tilde, &ws.user, &[0, 1]).unwrap();
        let nbr = bar.clone();
        let out = bs_combine(&bar, &[&nbr], &ws.bs).unwrap();
        for (a, b) in out.iter().zip(s.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn probability_simplex_examples() {
        let out = project_probability_simplex(&[0.2, 0.8]).unwrap();
        assert_abs_diff_eq!(out[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.8, epsilon = 1e-12);

        let out = project_probability_simplex(&[2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-12);

        let out = project_probability_simplex(&[0.5, 0.5, 0.5]).unwrap();
        for x in out {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-12);
        }

        assert!(project_probability_simplex(&[]).is_err());
    }

    #[test]
    fn capped_simplex_examples() {
        // Feasible input returned exactly.
        let v = array![[0.1, 0.2], [0.3, 0.4]];
        let out = project_capped_simplex(&v, 2.0, 1.0).unwrap();
        assert_eq!(out, v);

        // KKT water-filling with theta = 4/15.
        let v = array![[0.5, 0.9, 0.9]];
        let out = project_capped_simplex(&v, 1.5, 1.0).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 7.0 / 30.0, epsilon = 1e-10);
        assert_abs_diff_eq!(out[[0, 1]], 19.0 / 30.0, epsilon = 1e-10);
        assert_abs_diff_eq!(out[[0, 2]], 19.0 / 30.0, epsilon = 1e-10);
        assert_abs_diff_eq!(out.sum(), 1.5, epsilon = 1e-10);

        // Negative entries clamp to zero.
        let v = array![[-1.0, -1.0]];
        let out = project_capped_simplex(&v, 5.0, 1.0).unwrap();
        assert_eq!(out, array![[0.0, 0.0]]);

        assert!(project_capped_simplex(&array![[f64::NAN]], 1.0, 1.0).is_err());
    }

    #[test]
    fn capped_simplex_inactive_when_budget_huge() {
        let v = array![[0.4, 0.9], [0.2, 1.0]];
        let out = project_capped_simplex(&v, 100.0, 1.0).unwrap();
        assert_eq!(out, v);
    }

    /// Iteratively refined grid search for the nearest point of the capped
    /// simplex; independent of the closed-form projection.
    fn grid_search_capped(v: &[f64], budget: f64, cap: f64) -> Vec<f64> {
        let n = v.len();
        let steps = 10usize;
        let mut center = vec![0.5 * cap; n];
        let mut radius = cap;
        let mut best = center.clone();
        for _ in 0..22 {
            let mut best_d = f64::INFINITY;
            let mut coords = vec![0usize; n];
            let mut candidate = vec![0.0; n];
            'outer: loop {
                for i in 0..n {
                    let lo = (center[i] - radius).max(0.0);
                    let hi = (center[i] + radius).min(cap);
                    candidate[i] = lo + (hi - lo) * coords[i] as f64 / steps as f64;
                }
                if candidate.iter().sum::<f64>() <= budget + 1e-15 {
                    let d: f64 = candidate.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d < best_d {
                        best_d = d;
                        best = candidate.clone();
                    }
                }
                let mut k = 0;
                loop {
                    coords[k] += 1;
                    if coords[k] <= steps {
                        break;
                    }
                    coords[k] = 0;
                    k += 1;
                    if k == n {
                        break 'outer;
                    }
                }
            }
            center = best.clone();
            radius /= 2.5;
        }
        best
    }

    #[test]
    fn capped_projection_agrees_with_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let n = rng.gen_range(2..=4);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..2.0)).collect();
            let budget = rng.gen_range(0.5..(n as f64) * 0.9);
            let arr = Array2::from_shape_vec((1, n), v.clone()).unwrap();
            let ours = project_capped_simplex(&arr, budget, 1.0).unwrap();
            let grid = grid_search_capped(&v, budget, 1.0);
            for (a, b) in ours.iter().zip(grid.iter()) {
                assert!((a - b).abs() < 1e-6, "{ours:?} vs {grid:?}");
            }
        }
    }

    #[test]
    fn projections_idempotent_and_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(2..=6);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let budget = rng.gen_range(0.5..(n as f64));
            let arr = Array2::from_shape_vec((1, n), v.clone()).unwrap();
            let out = project_capped_simplex(&arr, budget, 1.0).unwrap();
            assert!(out.sum() <= budget + 1e-9);
            assert!(out.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
            let twice = project_capped_simplex(&out, budget, 1.0).unwrap();
            for (a, b) in twice.iter().zip(out.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
            // Nearest-point property against random feasible points.
            let d_out: f64 = out.iter().zip(v.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            for _ in 0..200 {
                let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
                let s: f64 = x.iter().sum();
                if s > budget {
                    for xi in &mut x {
                        *xi *= budget / s;
                    }
                }
                let d_x: f64 = x.iter().zip(v.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                assert!(d_out <= d_x + 1e-9);
            }

            let simplex = project_probability_simplex(&v).unwrap();
            let s: f64 = simplex.iter().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-9);
            assert!(simplex.iter().all(|&x| x >= -1e-12));
            let twice = project_probability_simplex(&simplex).unwrap();
            for (a, b) in twice.iter().zip(simplex.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn halfspace_projection_inactive_when_satisfied() {
        let v = array![[0.2, 0.2]];
        let coeffs = array![[1.0, 1.0]];
        let out = project_capped_simplex_with_halfspace(&v, 1.0, 1.0, &coeffs, 0.1, 100, 1e-8).unwrap();
        assert!(!out.infeasible);
        assert_eq!(out.values, v);
    }

    #[test]
    fn halfspace_projection_enforces_minimum_mass() {
        // Only the first coordinate carries fetch delay; feasibility needs
        // x0 >= 0.6.
        let v = array![[0.1, 0.9]];
        let coeffs = array![[1.0, 0.0]];
        let out = project_capped_simplex_with_halfspace(&v, 1.5, 1.0, &coeffs, 0.6, 200, 1e-10).unwrap();
        assert!(!out.infeasible);
        assert!(out.values[[0, 0]] >= 0.6 - 1e-6, "{:?}", out.values);
        assert!(out.values.sum() <= 1.5 + 1e-9);
    }

    #[test]
    fn halfspace_projection_detects_empty_intersection() {
        let v = array![[0.5, 0.5]];
        let coeffs = array![[1.0, 1.0]];
        // Max attainable is budget 1.0 < rhs.
        let out = project_capped_simplex_with_halfspace(&v, 1.0, 1.0, &coeffs, 3.0, 100, 1e-8).unwrap();
        assert!(out.infeasible);
        assert_eq!(out.values, project_capped_simplex(&v, 1.0, 1.0).unwrap());
    }

    #[test]
    fn weight_set_uniform_validates() {
        let ws = WeightSet::uniform(4, 3, 5, &[0, 2], vec![1, 0, 2]);
        ws.validate(&[0, 2], 1e-12).unwrap();
        assert_eq!(ws.tau(), 5);
        assert_eq!(ws.members, vec![1, 0, 2]);
        let means = ws.temporal_slot_means();
        for m in means {
            assert_abs_diff_eq!(m, 0.2, epsilon = 1e-12);
        }
    }
}
