//! Covering numbers of distance shells and sieve checks.

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::density::Density;
use crate::divergence::kl;
use crate::error::{Error, Result};
use crate::family::FiniteFamily;

/// Greedy cover of the shell `{j eps <= d(f, f*) < (j+1) eps}` by balls of
/// radius `j eps / 3` centered at shell members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverShell {
    pub j: usize,
    pub members: Vec<usize>,
    pub centers: Vec<usize>,
    pub count: usize,
}

fn greedy_cover<M: Fn(usize, usize) -> f64>(set: &[usize], radius: f64, pair: &M) -> Vec<usize> {
    let mut uncovered: Vec<usize> = set.to_vec();
    let mut centers = Vec::new();
    while !uncovered.is_empty() {
        let (c, _) = set
            .iter()
            .map(|&c| {
                let k = uncovered.iter().filter(|&&u| pair(c, u) < radius).count();
                (c, k)
            })
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .unwrap();
        uncovered.retain(|&u| pair(c, u) >= radius);
        centers.push(c);
    }
    centers
}

/// Shells `j = 1, 2, ..` up to the farthest member.
pub fn covering_numbers<M>(dist: &[f64], pair: M, eps: f64) -> Result<Vec<CoverShell>>
where
    M: Fn(usize, usize) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::Domain {
            name: "eps",
            value: eps,
            domain: "(0, inf)",
        });
    }
    if let Some(member) = dist.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::Metric { member });
    }
    let top = dist.iter().copied().fold(0.0, f64::max);
    let j_max = (top / eps).floor() as usize;
    Ok((1..=j_max)
        .map(|j| {
            let (lo, hi) = (j as f64 * eps, (j + 1) as f64 * eps);
            let members: Vec<usize> = (0..dist.len())
                .filter(|&m| dist[m] >= lo && dist[m] < hi)
                .collect();
            let centers = greedy_cover(&members, j as f64 * eps / 3.0, &pair);
            CoverShell {
                j,
                count: centers.len(),
                members,
                centers,
            }
        })
        .collect())
}

type Membership<'a> = Box<dyn Fn(usize, usize) -> bool + Sync + 'a>;

/// Sieve `V_n` (to be covered) and remainder `W_n` (to carry small prior
/// mass). Memberships take `(n, member)`.
pub struct SieveSpec<'a> {
    pub in_v: Membership<'a>,
    pub in_w: Membership<'a>,
    pub delta: f64,
    /// `J_n <= a n^r`.
    pub j_bound: (f64, f64),
    /// Ball radius for `J_n`.
    pub eps: f64,
    pub n_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveRow {
    pub n: usize,
    pub w_mass: f64,
    pub w_bound: f64,
    pub j_n: usize,
    pub j_bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveReport {
    pub verdict: Verdict,
    /// `K(f0, f*)`; the rate must exceed twice this.
    pub kl_truth_fstar: f64,
    pub delta_ok: bool,
    pub rows: Vec<SieveRow>,
}

pub fn check_sieve<M>(
    spec: &SieveSpec,
    f0: &Density,
    family: &FiniteFamily,
    fstar_index: usize,
    pair: M,
    tol: f64,
) -> Result<SieveReport>
where
    M: Fn(usize, usize) -> f64,
{
    let fstar = family
        .members
        .get(fstar_index)
        .ok_or_else(|| Error::Config("projection index out of range".into()))?;
    let k = kl(f0, fstar, tol)?.value;
    let delta_ok = spec.delta > 2.0 * k;
    let mut rows = Vec::new();
    for &n in &spec.n_values {
        let mut v = Vec::new();
        let mut w_mass = 0.0;
        for m in 0..family.len() {
            let (a, b) = ((spec.in_v)(n, m), (spec.in_w)(n, m));
            if !a && !b {
                return Err(Error::CoverageGap { n, member: m });
            }
            if a {
                v.push(m);
            }
            if b {
                w_mass += family.prior[m];
            }
        }
        let j_n = greedy_cover(&v, spec.eps, &pair).len();
        let w_bound = (-(n as f64) * spec.delta).exp();
        let j_bound = spec.j_bound.0 * (n as f64).powf(spec.j_bound.1);
        rows.push(SieveRow {
            n,
            w_mass,
            w_bound,
            j_n,
            j_bound,
            ok: w_mass < w_bound && (j_n as f64) <= j_bound,
        });
    }
    let verdict = if delta_ok && rows.iter().all(|r| r.ok) {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(SieveReport {
        verdict,
        kl_truth_fstar: k,
        delta_ok,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_shell_member_is_covered() {
        let dist: Vec<f64> = (0..40).map(|i| i as f64 * 0.037).collect();
        let pair = |a: usize, b: usize| (dist[a] - dist[b]).abs();
        let shells = covering_numbers(&dist, pair, 0.1).unwrap();
        assert!(!shells.is_empty());
        for s in &shells {
            let r = s.j as f64 * 0.1 / 3.0;
            for &m in &s.members {
                assert!(s.centers.iter().any(|&c| pair(c, m) < r));
            }
        }
    }

    #[test]
    fn negative_distance_is_a_metric_error() {
        assert_eq!(
            covering_numbers(&[0.0, -1.0], |_, _| 0.0, 0.1),
            Err(Error::Metric { member: 1 })
        );
    }

    fn geometric_family(c: f64, k_max: usize) -> FiniteFamily {
        // Well-specified: every member is the truth, prior 2^(-c k).
        let u = Density::uniform(0.0, 1.0).unwrap();
        let w: Vec<f64> = (1..=k_max).map(|k| 2f64.powf(-c * k as f64)).collect();
        FiniteFamily::weighted(vec![u; k_max], &w).unwrap()
    }

    #[test]
    fn sieve_rate_threshold() {
        let f0 = Density::uniform(0.0, 1.0).unwrap();
        for (c, delta, want) in [(1.0, 0.5, Verdict::Holds), (1.0, 0.8, Verdict::Fails)] {
            let fam = geometric_family(c, 60);
            let spec = SieveSpec {
                in_v: Box::new(|n, m| m < n),
                in_w: Box::new(|n, m| m >= n),
                delta,
                j_bound: (1.0, 1.0),
                eps: 0.1,
                n_values: (1..=10).collect(),
            };
            let r = check_sieve(&spec, &f0, &fam, 0, |_, _| 0.0, 1e-10).unwrap();
            assert_eq!(r.verdict, want, "c log 2 = {}, delta = {delta}", c * 2f64.ln());
        }
    }

    #[test]
    fn coverage_gap_detected() {
        let f0 = Density::uniform(0.0, 1.0).unwrap();
        let fam = geometric_family(1.0, 5);
        let spec = SieveSpec {
            in_v: Box::new(|_, m| m < 2),
            in_w: Box::new(|_, m| m > 2),
            delta: 0.1,
            j_bound: (1.0, 1.0),
            eps: 0.1,
            n_values: vec![3],
        };
        let r = check_sieve(&spec, &f0, &fam, 0, |_, _| 0.0, 1e-10);
        assert_eq!(r.unwrap_err(), Error::CoverageGap { n: 3, member: 2 });
    }
}
