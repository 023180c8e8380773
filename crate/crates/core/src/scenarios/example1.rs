//! First counterexample: members `f_b` with `b` increasing to 1/2 approach
//! the projection `Unif(0,2)` in KL excess but stay a fixed L1 distance
//! away from it.

use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::divergence::{kl, kl_excess, l1, weighted_l1};
use crate::error::{domain, Result};
use crate::family::FiniteFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Row {
    pub b: f64,
    pub kl: f64,
    pub kl_closed: f64,
    pub kl_excess: f64,
    pub l1_mu: f64,
    pub l1_mu0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Report {
    pub rows: Vec<Example1Row>,
    /// `K(f0, f_b)` strictly decreases along increasing `b`.
    pub kl_decreasing: bool,
    /// Every plain L1 distance to the projection exceeds 1/4.
    pub l1_above_quarter: bool,
}

/// Default sequence `b_k = 1/2 - 1/k`.
pub fn default_b(k_max: u32) -> Vec<f64> {
    (3..=k_max).map(|k| 0.5 - 1.0 / k as f64).collect()
}

/// Truth `Unif(0,1)`, family `{f_{b_k}} ∪ {Unif(0,2)}` with uniform prior.
/// Returns the projection index as well.
pub fn example1_family(k_max: u32) -> Result<(Density, FiniteFamily, usize)> {
    let f0 = Density::uniform(0.0, 1.0)?;
    let mut members: Vec<Density> = default_b(k_max)
        .into_iter()
        .map(Density::example1_member)
        .collect::<Result<_>>()?;
    members.push(Density::uniform(0.0, 2.0)?);
    let params = default_b(k_max)
        .into_iter()
        .map(|b| vec![b])
        .chain(std::iter::once(vec![0.5]))
        .collect();
    let s = members.len() - 1;
    let fam = FiniteFamily::uniform(members)?.with_params(params)?;
    Ok((f0, fam, s))
}

pub fn example1_report(b_values: &[f64], tol: f64) -> Result<Example1Report> {
    let f0 = Density::uniform(0.0, 1.0)?;
    let fs = Density::uniform(0.0, 2.0)?;
    let mut rows = Vec::with_capacity(b_values.len());
    for &b in b_values {
        if !(b > 0.0 && b < 0.5) {
            return Err(domain("b", b, "(0, 1/2)"));
        }
        let f = Density::example1_member(b)?;
        rows.push(Example1Row {
            b,
            kl: kl(&f0, &f, tol)?.value,
            kl_closed: -b.ln(),
            kl_excess: kl_excess(&f0, &f, &fs, tol)?.value,
            l1_mu: l1(&f, &fs, tol)?.value,
            l1_mu0: weighted_l1(&f0, &f, &fs, &fs, tol)?.value,
        });
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.b.total_cmp(&b.b));
    let kl_decreasing = sorted.windows(2).all(|w| w[1].kl < w[0].kl);
    let l1_above_quarter = rows.iter().all(|r| r.l1_mu > 0.25);
    Ok(Example1Report {
        rows,
        kl_decreasing,
        l1_above_quarter,
    })
}
