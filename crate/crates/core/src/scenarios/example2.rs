//! Second counterexample: point masses on the integers.
//!
//! The base measure is Lebesgue on `[0, 2]` plus counting measure on
//! `{3, 4, ...}`. Members are `f_k` (mass `1/2 + 1/k` at `k`) with prior
//! `2^-(k-1)` and `g_a` with prior density `a^(-1/2) / 4`. The truth puts
//! mass so close to 1 that `1 - sqrt(M_n)` underflows; it is tracked through
//! `log(1 - sqrt y)`, which the sampler produces exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::density::Density;
use crate::error::{domain, Error, Result};
use crate::family::FiniteFamily;
use crate::report::{num, ExperimentReport};
use crate::rng;

/// Relative size of the neglected series tail.
pub const TAIL_REL: f64 = 1e-13;
const K_CAP: u32 = 5_000_000;

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example2State {
    pub n: usize,
    pub log_one_minus_sqrt_m: f64,
    /// `log A_n`.
    pub log_a: f64,
    /// `A_n / (1 + A_n)`.
    pub lower_bound: f64,
    /// `log(1 - lower_bound)`, accurate when the bound rounds to 1.
    pub log_one_minus_bound: f64,
    pub k_max: u32,
    /// Bound on the neglected tail relative to the kept sum.
    pub tail_rel: f64,
}

fn log_term(n: usize, k: u32) -> f64 {
    let kf = k as f64;
    n as f64 * (0.5 - 1.0 / kf).ln() - (kf - 1.0) * LN2
}

/// `log sum_{k=3}^{K} (1/2 - 1/k)^n 2^-(k-1)` with `K` adaptive.
fn log_series(n: usize) -> Result<(f64, u32, f64)> {
    // Running log-sum-exp; terms peak then decay geometrically.
    let mut m = log_term(n, 3);
    let mut s = 1.0f64;
    let mut k = 3;
    loop {
        // Tail beyond k: (1/2)^n 2^-(k-1).
        let tail = -(n as f64) * LN2 - (k as f64 - 1.0) * LN2;
        let kept = m + s.ln();
        let rel = (tail - kept).exp();
        if rel <= TAIL_REL {
            return Ok((kept, k, rel));
        }
        k += 1;
        if k > K_CAP {
            return Err(Error::Truncation(TAIL_REL));
        }
        let t = log_term(n, k);
        if t > m {
            s = s * (m - t).exp() + 1.0;
            m = t;
        } else {
            s += (t - m).exp();
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Lower bound on the posterior mass of members away from the projection,
/// given `log(1 - sqrt(M_n))` for the sample maximum `M_n`.
pub fn example2_lower_bound(n: usize, log_one_minus_sqrt_m: f64) -> Result<Example2State> {
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    if !(log_one_minus_sqrt_m <= 0.0) {
        return Err(domain("log(1 - sqrt m)", log_one_minus_sqrt_m, "(-inf, 0]"));
    }
    let (log_s, k_max, tail_rel) = log_series(n)?;
    let log_a = log_s + (n as f64 + 1.0) * LN2 - log_one_minus_sqrt_m;
    Ok(Example2State {
        n,
        log_one_minus_sqrt_m,
        log_a,
        lower_bound: 1.0 / (1.0 + (-log_a).exp()),
        log_one_minus_bound: -softplus(log_a),
        k_max,
        tail_rel,
    })
}

/// The same series by a multiplicative recurrence in `n`, in linear
/// space: `T_k(n) = T_k(n-1) (1 - 2/k)` with `A_n = 2 sum_k T_k(n) 2^-(k-1)
/// / (1 - sqrt m)`. Valid while nothing underflows (`n` up to a few hundred).
pub struct Example2Series {
    terms: Vec<f64>,
    ratios: Vec<f64>,
    n: usize,
}

impl Example2Series {
    /// Keeps `k = 3..=k_max`.
    pub fn new(k_max: u32) -> Self {
        let ks = 3..=k_max;
        Example2Series {
            terms: ks.clone().map(|k| 0.5f64.powi(k as i32 - 1)).collect(),
            ratios: ks.map(|k| 1.0 - 2.0 / k as f64).collect(),
            n: 0,
        }
    }

    /// Advances to `n + 1` and returns `log A_{n+1}` at `1 - sqrt m = 1`.
    pub fn step(&mut self) -> f64 {
        for (t, r) in self.terms.iter_mut().zip(&self.ratios) {
            *t *= r;
        }
        self.n += 1;
        // Compensated sum, smallest terms first.
        let mut sum = 0.0f64;
        let mut c = 0.0f64;
        for t in self.terms.iter().rev() {
            let y = t - c;
            let z = sum + y;
            c = (z - sum) - y;
            sum = z;
        }
        sum.ln() + LN2
    }
}

/// Family with `f_k` for `k = 3..=k_max` and `g_a` on `a_grid`, prior
/// `2^-(k-1)` for `f_k` and trapezoid weights of `a^(-1/2)/4` for `g_a`;
/// renormalized. The projection `g_1 = Unif(0,2)` is the last grid point.
pub fn example2_family(k_max: u32, a_grid: &[f64]) -> Result<(Density, FiniteFamily, usize)> {
    if a_grid.len() < 2 || a_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("a-grid must be increasing".into()));
    }
    if *a_grid.last().unwrap() != 1.0 {
        return Err(Error::Config("a-grid must end at 1".into()));
    }
    let mut members = Vec::new();
    let mut w = Vec::new();
    for k in 3..=k_max {
        members.push(Density::example2_member(k)?);
        w.push(0.5f64.powi(k as i32 - 1));
    }
    // Exact cell masses of the prior density, split half-half between
    // neighboring nodes.
    let cdf = |a: f64| 0.5 * a.sqrt();
    let mut aw = vec![0.0; a_grid.len()];
    aw[0] += cdf(a_grid[0]);
    for i in 0..a_grid.len() - 1 {
        let m = cdf(a_grid[i + 1]) - cdf(a_grid[i]);
        aw[i] += 0.5 * m;
        aw[i + 1] += 0.5 * m;
    }
    for (&a, wa) in a_grid.iter().zip(aw) {
        members.push(Density::example2_g(a)?);
        w.push(wa);
    }
    let s = members.len() - 1;
    Ok((Density::example2_truth(), FiniteFamily::weighted(members, &w)?, s))
}

/// Increasing `a`-grid on `(0, 1]`, refined geometrically toward 1.
pub fn default_a_grid(coarse: usize, fine: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (1..coarse).map(|i| i as f64 / coarse as f64 * 0.5).collect();
    for j in 0..=fine {
        g.push(1.0 - 0.5 * 0.5f64.powi(j as i32));
    }
    g.push(1.0);
    g
}

/// Simulates `reps` samples from the truth and records, per replication
/// and `n`, the exact `log(1 - sqrt M_n)` and the posterior lower bound.
pub fn example2_simulate(n_max: usize, reps: usize, seed: u64) -> Result<ExperimentReport> {
    if n_max == 0 || n_max > 10_000 {
        return Err(domain("n_max", n_max as f64, "1..=10000"));
    }
    let f0 = Density::example2_truth();
    let series: Vec<Example2State> = (1..=n_max)
        .map(|n| example2_lower_bound(n, 0.0))
        .collect::<Result<_>>()?;
    let per_rep: Vec<Vec<(f64, Example2State)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut r = rng::stream(seed, rep as u64);
            let mut lm = 0.0f64;
            (1..=n_max)
                .map(|n| {
                    lm = lm.min(f0.sample(&mut r).log1m_sqrt());
                    let base = &series[n - 1];
                    let log_a = base.log_a - lm;
                    let st = Example2State {
                        n,
                        log_one_minus_sqrt_m: lm,
                        log_a,
                        lower_bound: 1.0 / (1.0 + (-log_a).exp()),
                        log_one_minus_bound: -softplus(log_a),
                        k_max: base.k_max,
                        tail_rel: base.tail_rel,
                    };
                    (lm, st)
                })
                .collect()
        })
        .collect();
    let mut report = ExperimentReport::new(
        "example2",
        json!({"n_max": n_max, "replications": reps, "seed": seed}),
        &[
            "replication",
            "n",
            "lower_bound",
            "log1msqrtMn",
            "event",
            "seed",
        ],
    );
    let mut first_n: Vec<Option<usize>> = Vec::new();
    let mut final_bounds = Vec::new();
    let mut all_from_10 = 0;
    for (rep, path) in per_rep.iter().enumerate() {
        let mut first = None;
        for (lm, st) in path {
            let event = *lm < -(st.n as f64);
            if event {
                first.get_or_insert(st.n);
            } else {
                first = None;
            }
            report.push(vec![
                json!(rep),
                json!(st.n),
                num(st.lower_bound),
                num(*lm),
                json!(event),
                json!(seed),
            ]);
        }
        if path
            .iter()
            .filter(|(_, st)| st.n >= 10)
            .all(|(lm, st)| *lm < -(st.n as f64))
        {
            all_from_10 += 1;
        }
        first_n.push(first);
        final_bounds.push(path.last().unwrap().1.lower_bound);
    }
    let mut fb = final_bounds.clone();
    fb.sort_by(f64::total_cmp);
    let q = |p: f64| fb[((fb.len() - 1) as f64 * p).round() as usize];
    let settled: Vec<usize> = first_n.iter().flatten().copied().collect();
    report.summary = json!({
        "replications": reps,
        "bound_at_n_max_ge_0.99": final_bounds.iter().filter(|b| **b >= 0.99).count(),
        "event_holds_for_all_n_from_10": all_from_10,
        "never_settled": first_n.iter().filter(|f| f.is_none()).count(),
        "first_settled_n": settled,
        "bound_at_n_max_quantiles": {"min": num(q(0.0)), "q05": num(q(0.05)), "median": num(q(0.5))},
    });
    Ok(report)
}

/// Exact probability that the event fails at `n`: `(1 - n^-1/2)^n`.
pub fn event_failure_probability(n: usize) -> f64 {
    let n = n as f64;
    (1.0 - n.powf(-0.5)).powf(n)
}

pub fn summary_count(report: &ExperimentReport, key: &str) -> usize {
    report.summary.get(key).and_then(Value::as_u64).unwrap_or(0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // n = 1, 1 - sqrt m = 0.1.
        let s = example2_lower_bound(1, 0.1f64.ln()).unwrap();
        let a = s.log_a.exp();
        assert!((a - 4.55).abs() < 0.01, "{a}");
        assert!((s.lower_bound - 0.820).abs() < 1e-3);
        let s0 = example2_lower_bound(1, 0.0).unwrap();
        assert!((s0.log_a.exp() * 10.0 - a).abs() < 1e-12);
    }

    #[test]
    fn truncation_invariant() {
        for n in [1, 10, 100, 1000] {
            let s = example2_lower_bound(n, 0.0).unwrap();
            assert!(s.tail_rel <= TAIL_REL);
        }
    }

    #[test]
    fn bound_tends_to_one_on_the_event() {
        let s = example2_lower_bound(40, -40.0).unwrap();
        assert!(s.lower_bound > 0.999_999);
        assert!(s.log_one_minus_bound < -14.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(example2_lower_bound(0, -1.0).is_err());
        assert!(example2_lower_bound(3, 0.5).is_err());
    }

    #[test]
    fn family_prior_is_normalized_and_projection_is_last() {
        let (_, fam, s) = example2_family(40, &default_a_grid(8, 12)).unwrap();
        assert_eq!(fam.members[s].label, "ex2_g1");
        assert!((fam.prior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
