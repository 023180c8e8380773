//! Numerical minimax equalities on convex hulls:
//! `inf_alpha sup_f h*_alpha = sup_f inf_alpha h*_alpha` and the same with
//! `g(alpha, f) = (1 - h*_alpha(f)) / alpha`.

use serde::{Deserialize, Serialize};

use super::hull::{maximize, minimize, Hull};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxConfig {
    /// Optimizer tolerances, coarse to fine; one pass per entry.
    pub levels: Vec<f64>,
    /// Gap accepted without further refinement.
    pub target: f64,
    /// Points of the alpha grid on `[0, 1]` used for the `g` variant.
    pub alpha_points: usize,
}

impl Default for MinimaxConfig {
    fn default() -> Self {
        MinimaxConfig {
            levels: vec![1e-3, 1e-6, 1e-10],
            target: 1e-3,
            alpha_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub h_inf_sup: f64,
    pub h_sup_inf: f64,
    pub h_gap: f64,
    pub g_sup_inf: f64,
    pub g_inf_sup: f64,
    pub g_gap: f64,
    /// Minimizing alpha on the `h` side.
    pub alpha_hat: f64,
    /// Maximizing mixture weights on the `h` side.
    pub lambda_hat: Vec<f64>,
    /// Largest absolute gap after each level.
    pub level_gaps: Vec<f64>,
}

/// Golden-section minimization of a convex function on `[lo, hi]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    // Endpoints are often optimal for monotone pieces.
    [(lo, f(lo)), (hi, f(hi)), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap()
}

fn one_level(hull: &Hull, tol: f64, alpha_points: usize) -> MinimaxReport {
    let d = hull.dim();
    // h side.
    let sup_h = |a: f64| maximize(d, |l| hull.affinity(l, a), tol).1;
    let (alpha_hat, h_inf_sup) = golden_min(sup_h, 0.0, 1.0, tol.max(1e-9));
    let inf_h = |l: &[f64]| golden_min(|a| hull.affinity(l, a), 0.0, 1.0, tol.max(1e-9)).1;
    let (lambda_hat, h_sup_inf) = maximize(d, inf_h, tol);
    // g side on a fixed alpha grid.
    let grid: Vec<f64> = (0..alpha_points)
        .map(|i| i as f64 / (alpha_points - 1) as f64)
        .collect();
    let g_sup_inf = grid
        .iter()
        .map(|&a| minimize(d, |l| hull.g_alpha(l, a), tol).1)
        .fold(f64::NEG_INFINITY, f64::max);
    let g_inf_sup = minimize(
        d,
        |l| {
            grid.iter()
                .map(|&a| hull.g_alpha(l, a))
                .fold(f64::NEG_INFINITY, f64::max)
        },
        tol,
    )
    .1;
    MinimaxReport {
        h_inf_sup,
        h_sup_inf,
        h_gap: h_inf_sup - h_sup_inf,
        g_sup_inf,
        g_inf_sup,
        g_gap: g_inf_sup - g_sup_inf,
        alpha_hat,
        lambda_hat,
        level_gaps: Vec::new(),
    }
}

/// Both minimax gaps on `hull`, refined level by level until the larger
/// gap is within `cfg.target`.
pub fn minimax_gap(hull: &Hull, cfg: &MinimaxConfig) -> Result<MinimaxReport> {
    if cfg.levels.is_empty() || cfg.alpha_points < 2 {
        return Err(Error::Config("minimax needs levels and an alpha grid".into()));
    }
    let mut gaps = Vec::new();
    let mut last = None;
    for &tol in &cfg.levels {
        let r = one_level(hull, tol, cfg.alpha_points);
        gaps.push(r.h_gap.abs().max(r.g_gap.abs()));
        let done = *gaps.last().unwrap() <= cfg.target;
        last = Some(r);
        if done {
            break;
        }
    }
    let mut r = last.unwrap();
    let final_gap = *gaps.last().unwrap();
    if final_gap > cfg.target && final_gap >= gaps[0] {
        return Err(Error::GridTooCoarse { gap: final_gap });
    }
    r.level_gaps = gaps;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkers::hull::random_probability;
    use crate::rng;

    #[test]
    fn golden_finds_interior_minimum() {
        let (x, v) = golden_min(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8 && v < 1e-15);
    }

    #[test]
    fn random_hull_gaps_are_small() {
        let mut r = rng::stream(21, 0);
        let f0 = random_probability(&mut r, 4, 0.2);
        let fs = random_probability(&mut r, 4, 0.2);
        let g = (0..3).map(|_| random_probability(&mut r, 4, 0.2)).collect();
        let h = Hull::new(f0, fs, g).unwrap();
        let rep = minimax_gap(&h, &MinimaxConfig::default()).unwrap();
        assert!(rep.h_gap.abs() <= 1e-3 && rep.g_gap.abs() <= 1e-3, "{rep:?}");
        assert!(rep.h_gap >= -1e-9);
    }
}
