//! Independent oracles shared by the integration suites: refined grid
//! searches for the projections, exhaustive support enumeration for the
//! hindsight strategy, and central finite differences for the gradient.
//! None of these call the closed-form implementation paths they check.

use ndarray::Array2;

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest point of `{0 <= x <= cap, sum x <= budget}` by iteratively
/// refined grid search. The incumbent is tracked globally and a level can
/// only improve it, so boundary clipping cannot make the refinement regress;
/// halving windows with 17 points per axis always cover the previous level's
/// quantization error.
pub fn grid_search_capped(v: &[f64], budget: f64, cap: f64) -> Vec<f64> {
    let n = v.len();
    let steps = 16usize;
    let mut best = vec![0.0; n];
    let mut best_d = dist_sq(&best, v);
    let mut radius = cap.max(1.0);
    for _ in 0..34 {
        let center = best.clone();
        let mut coords = vec![0usize; n];
        let mut candidate = vec![0.0; n];
        'outer: loop {
            for i in 0..n {
                let lo = (center[i] - radius).max(0.0);
                let hi = (center[i] + radius).min(cap);
                candidate[i] = lo + (hi - lo) * coords[i] as f64 / steps as f64;
            }
            if candidate.iter().sum::<f64>() <= budget + 1e-15 {
                let d = dist_sq(&candidate, v);
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
        radius /= 2.0;
    }
    best
}

/// Nearest point of the probability simplex by refined grid search over the
/// first `n-1` coordinates (the last is determined by the equality).
pub fn grid_search_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n == 1 {
        return vec![1.0];
    }
    let m = n - 1;
    let steps = 16usize;
    let full = |head: &[f64]| -> Vec<f64> {
        let mut x = head.to_vec();
        x.push((1.0 - head.iter().sum::<f64>()).max(0.0));
        x
    };
    let mut best_head = vec![1.0 / n as f64; m];
    let mut best_d = dist_sq(&full(&best_head), v);
    let mut radius = 1.0;
    for _ in 0..34 {
        let center = best_head.clone();
        let mut coords = vec![0usize; m];
        let mut head = vec![0.0; m];
        'outer: loop {
            for i in 0..m {
                let lo = (center[i] - radius).max(0.0);
                let hi = (center[i] + radius).min(1.0);
                head[i] = lo + (hi - lo) * coords[i] as f64 / steps as f64;
            }
            if head.iter().sum::<f64>() <= 1.0 + 1e-15 {
                let d = dist_sq(&full(&head), v);
                if d < best_d {
                    best_d = d;
                    best_head = head.clone();
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
                if k == m {
                    break 'outer;
                }
            }
        }
        radius /= 2.0;
    }
    full(&best_head)
}

/// Cell objective of the caching model, written out independently of the
/// library: `phi * log10(1 / max((d - phi d)^2, floor))`, clamped to
/// `[0, log10(1/floor)]`, zero when nothing is demanded.
pub fn oracle_cell_hit(phi: f64, d: f64, floor: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    let mse = (d - phi * d) * (d - phi * d);
    let q = (1.0 / mse.max(floor)).log10().max(0.0);
    phi * q
}

/// Total hit of a fixed strategy over a demand window.
#[allow(dead_code)]
pub fn oracle_window_value(strategy: &Array2<f64>, window: &[&Array2<f64>], floor: f64) -> f64 {
    let mut total = 0.0;
    for d in window {
        for (p, dd) in strategy.iter().zip(d.iter()) {
            total += oracle_cell_hit(*p, *dd, floor);
        }
    }
    total
}

/// Best achievable window value over all supports of exactly `k` cells.
pub fn exhaustive_hindsight(window: &[&Array2<f64>], k: usize, floor: f64) -> f64 {
    let dim = window[0].dim();
    let n = dim.0 * dim.1;
    let k = k.min(n);
    let mut best = f64::NEG_INFINITY;
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    fn rec(
        start: usize,
        left: usize,
        n: usize,
        chosen: &mut Vec<usize>,
        window: &[&Array2<f64>],
        dim: (usize, usize),
        floor: f64,
        best: &mut f64,
    ) {
        if left == 0 {
            let mut total = 0.0;
            for d in window {
                for &c in chosen.iter() {
                    total += oracle_cell_hit(1.0, d[[c / dim.1, c % dim.1]], floor);
                }
            }
            if total > *best {
                *best = total;
            }
            return;
        }
        for p in start..=n - left {
            chosen.push(p);
            rec(p + 1, left - 1, n, chosen, window, dim, floor, best);
            chosen.pop();
        }
    }
    rec(0, k, n, &mut chosen, window, dim, floor, &mut best);
    best
}

/// Central finite difference of the cell objective.
pub fn fd_cell_grad(phi: f64, d: f64, floor: f64, step: f64) -> f64 {
    (oracle_cell_hit(phi + step, d, floor) - oracle_cell_hit(phi - step, d, floor)) / (2.0 * step)
}
