//! Convex hulls of finitely many probability vectors on a finite sample
//! space, and optimization over them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::discrete;
use crate::error::{Error, Result};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    pub f0: Vec<f64>,
    pub fstar: Vec<f64>,
    pub generators: Vec<Vec<f64>>,
}

fn is_prob(p: &[f64]) -> bool {
    p.iter().all(|x| x.is_finite() && *x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-12
}

/// Random probability vector with entries bounded below by `floor / k`
/// before normalization, so likelihood ratios stay bounded.
pub fn random_probability(rng: &mut Stream, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

impl Hull {
    pub fn new(f0: Vec<f64>, fstar: Vec<f64>, generators: Vec<Vec<f64>>) -> Result<Self> {
        let k = f0.len();
        if generators.is_empty() {
            return Err(Error::Config("hull needs at least one generator".into()));
        }
        for p in std::iter::once(&f0)
            .chain(std::iter::once(&fstar))
            .chain(&generators)
        {
            if p.len() != k {
                return Err(Error::MeasureMismatch("sample spaces differ in size".into()));
            }
            if !is_prob(p) {
                return Err(Error::Weights(format!("{p:?} is not a probability vector")));
            }
        }
        if f0.iter().zip(&fstar).any(|(a, s)| *a > 0.0 && *s == 0.0) {
            return Err(Error::Config("f* vanishes where f0 has mass".into()));
        }
        Ok(Hull {
            f0,
            fstar,
            generators,
        })
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn point(&self, lambda: &[f64]) -> Vec<f64> {
        let k = self.f0.len();
        let mut p = vec![0.0; k];
        for (l, g) in lambda.iter().zip(&self.generators) {
            for i in 0..k {
                p[i] += l * g[i];
            }
        }
        p
    }

    pub fn affinity(&self, lambda: &[f64], alpha: f64) -> f64 {
        discrete::affinity(&self.f0, &self.fstar, &self.point(lambda), alpha)
    }

    pub fn kl_excess(&self, lambda: &[f64]) -> f64 {
        discrete::kl_excess(&self.f0, &self.fstar, &self.point(lambda))
    }

    pub fn g_alpha(&self, lambda: &[f64], alpha: f64) -> f64 {
        discrete::g_alpha(&self.f0, &self.fstar, &self.point(lambda), alpha)
    }

    /// Gradient of `lambda -> h_alpha(lambda)`.
    pub fn affinity_grad(&self, lambda: &[f64], alpha: f64) -> Vec<f64> {
        let m = self.point(lambda);
        self.generators
            .iter()
            .map(|g| {
                (0..m.len())
                    .filter(|&i| self.f0[i] > 0.0)
                    .map(|i| {
                        self.f0[i] * alpha * (m[i] / self.fstar[i]).powf(alpha - 1.0) * g[i]
                            / self.fstar[i]
                    })
                    .sum()
            })
            .collect()
    }

    /// Upper bound on `sup_hull h_alpha` from concavity:
    /// `h(l) <= h(l0) + grad(l0) . (l - l0)` for every `l` in the simplex.
    pub fn affinity_sup_certificate(&self, alpha: f64, tol: f64) -> (Vec<f64>, f64, f64) {
        let (lam, val) = maximize(self.dim(), |l| self.affinity(l, alpha), tol);
        let grad = self.affinity_grad(&lam, alpha);
        let dot: f64 = grad.iter().zip(&lam).map(|(a, b)| a * b).sum();
        let top = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bound = val + (top - dot).max(0.0);
        (lam, val, bound)
    }

    /// Mixing weights of the KL projection of `f0` onto the hull.
    ///
    /// Grid start, EM iterations, then Newton on the active face; the
    /// result satisfies the first-order conditions to rounding error.
    pub fn kl_projection(&self) -> Vec<f64> {
        project(&self.f0, &self.generators)
    }
}

/// Points of the simplex in `d` coordinates whose entries are multiples
/// of `1/m`.
pub fn simplex_grid(d: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if d == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i);
            rec(d - 1, left - i, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, m, m, &mut Vec::new(), &mut out);
    out
}

/// Maximizes a concave function over the simplex: best point of a coarse
/// grid, then pairwise pattern search down to step `tol`.
pub fn maximize<F: Fn(&[f64]) -> f64>(d: usize, f: F, tol: f64) -> (Vec<f64>, f64) {
    if d == 1 {
        let v = f(&[1.0]);
        return (vec![1.0], v);
    }
    let m = match d {
        2 => 64,
        3 => 24,
        4 => 12,
        _ => 6,
    };
    let mut best = vec![1.0 / d as f64; d];
    let mut best_v = f(&best);
    for p in simplex_grid(d, m) {
        let v = f(&p);
        if v > best_v {
            best_v = v;
            best = p;
        }
    }
    let mut step = 1.0 / m as f64;
    while step >= tol {
        let mut improved = false;
        for i in 0..d {
            for j in 0..d {
                if i == j || best[j] <= 0.0 {
                    continue;
                }
                let s = step.min(best[j]);
                let mut cand = best.clone();
                cand[i] += s;
                cand[j] -= s;
                if cand[j] < 1e-300 {
                    cand[j] = 0.0;
                }
                let v = f(&cand);
                if v > best_v {
                    best_v = v;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_v)
}

pub fn minimize<F: Fn(&[f64]) -> f64>(d: usize, f: F, tol: f64) -> (Vec<f64>, f64) {
    let (l, v) = maximize(d, |x| -f(x), tol);
    (l, -v)
}

fn mix(gens: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; gens[0].len()];
    for (l, g) in lambda.iter().zip(gens) {
        for (pi, gi) in p.iter_mut().zip(g) {
            *pi += l * gi;
        }
    }
    p
}

/// `E0[G_j / m]` for each generator.
fn scores(f0: &[f64], gens: &[Vec<f64>], m: &[f64]) -> Vec<f64> {
    gens.iter()
        .map(|g| {
            (0..m.len())
                .filter(|&i| f0[i] > 0.0)
                .map(|i| f0[i] * g[i] / m[i])
                .sum()
        })
        .collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// KL projection of `f0` onto the convex hull of `gens`, as mixing weights.
pub fn project(f0: &[f64], gens: &[Vec<f64>]) -> Vec<f64> {
    let d = gens.len();
    let neg_loglik = |l: &[f64]| discrete::kl(f0, &mix(gens, l));
    let (mut lam, _) = minimize(d, neg_loglik, 1e-4);
    // Keep every coordinate alive for EM.
    for l in lam.iter_mut() {
        *l = 0.999 * *l + 0.001 / d as f64;
    }
    for _ in 0..20_000 {
        let sc = scores(f0, gens, &mix(gens, &lam));
        for (l, s) in lam.iter_mut().zip(&sc) {
            *l *= s;
        }
        let t: f64 = lam.iter().sum();
        lam.iter_mut().for_each(|l| *l /= t);
    }
    // Newton on the face spanned by the surviving generators; the
    // constraint sum(lambda) = 1 enters through a multiplier.
    let mut active: Vec<usize> = (0..d).filter(|&j| lam[j] > 1e-9).collect();
    for j in 0..d {
        if !active.contains(&j) {
            lam[j] = 0.0;
        }
    }
    for _ in 0..200 {
        let m = mix(gens, &lam);
        let sc = scores(f0, gens, &m);
        let na = active.len();
        let mut a = vec![vec![0.0; na + 1]; na + 1];
        let mut b = vec![0.0; na + 1];
        for (r, &j) in active.iter().enumerate() {
            for (c, &k) in active.iter().enumerate() {
                a[r][c] = (0..m.len())
                    .filter(|&i| f0[i] > 0.0)
                    .map(|i| f0[i] * gens[j][i] * gens[k][i] / (m[i] * m[i]))
                    .sum();
            }
            a[r][na] = 1.0;
            a[na][r] = 1.0;
            // Stationarity: -score_j + mu = 0, with mu = 1 at the optimum.
            b[r] = sc[j] - 1.0;
        }
        // A small ridge keeps the step finite when generators on the face
        // are linearly dependent (many weights give the same mixture).
        let top = (0..na).map(|r| a[r][r]).fold(0.0, f64::max);
        for (r, row) in a.iter_mut().enumerate().take(na) {
            row[r] += 1e-12 * top;
        }
        let Some(step) = solve(a, b) else { break };
        let mut t = 1.0;
        while active
            .iter()
            .enumerate()
            .any(|(r, &j)| lam[j] + t * step[r] <= 0.0)
            && t > 1e-6
        {
            t *= 0.5;
        }
        for (r, &j) in active.iter().enumerate() {
            lam[j] += t * step[r];
        }
        let s: f64 = lam.iter().sum();
        lam.iter_mut().for_each(|l| *l /= s);
        let done = step.iter().take(na).all(|x| x.abs() < 1e-15);
        if done {
            break;
        }
        active.retain(|&j| lam[j] > 0.0);
    }
    lam
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn simplex_grid_size() {
        assert_eq!(simplex_grid(3, 4).len(), 15);
        assert!(simplex_grid(3, 4)
            .iter()
            .all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn projection_satisfies_first_order_conditions() {
        let mut r = rng::stream(5, 0);
        for _ in 0..20 {
            let f0 = random_probability(&mut r, 4, 0.1);
            let gens: Vec<Vec<f64>> = (0..3).map(|_| random_probability(&mut r, 4, 0.1)).collect();
            let lam = project(&f0, &gens);
            let m = mix(&gens, &lam);
            let sc = scores(&f0, &gens, &m);
            for (j, s) in sc.iter().enumerate() {
                assert!(*s <= 1.0 + 1e-12, "score {s}");
                if lam[j] > 1e-9 {
                    assert!((s - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn sup_certificate_bounds_the_grid() {
        let mut r = rng::stream(6, 0);
        let f0 = random_probability(&mut r, 4, 0.1);
        let fs = random_probability(&mut r, 4, 0.1);
        let gens: Vec<Vec<f64>> = (0..3).map(|_| random_probability(&mut r, 4, 0.1)).collect();
        let h = Hull::new(f0, fs, gens).unwrap();
        let (_, v, ub) = h.affinity_sup_certificate(0.5, 1e-10);
        assert!(ub >= v);
        for p in simplex_grid(3, 30) {
            assert!(h.affinity(&p, 0.5) <= ub + 1e-14);
        }
        assert!(ub - v < 1e-6);
    }
}
