//! Posterior over a finite family, normalized against the projection `f*`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::family::FiniteFamily;
use crate::measure::Point;
use crate::report::{num, ExperimentReport};
use crate::rng;

pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log-prior plus accumulated log-likelihood per member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorState {
    pub log_prior: Vec<f64>,
    pub log_lik: Vec<f64>,
    pub fstar_index: usize,
    pub n: usize,
}

impl PosteriorState {
    pub fn new(prior: &[f64], fstar_index: usize) -> Result<Self> {
        if fstar_index >= prior.len() {
            return Err(Error::Config(format!(
                "projection index {fstar_index} out of range"
            )));
        }
        Ok(PosteriorState {
            log_prior: prior.iter().map(|w| w.ln()).collect(),
            log_lik: vec![0.0; prior.len()],
            fstar_index,
            n: 0,
        })
    }

    /// Adds one observation given each member's log-density at it.
    pub fn update_with(&mut self, loglik: &[f64]) -> Result<()> {
        if loglik.iter().all(|l| *l == f64::NEG_INFINITY) {
            return Err(Error::Support(f64::NAN));
        }
        for (acc, l) in self.log_lik.iter_mut().zip(loglik) {
            *acc += l;
        }
        self.n += 1;
        Ok(())
    }

    pub fn update(&mut self, family: &FiniteFamily, y: &Point) -> Result<()> {
        let ll: Vec<f64> = family.members.iter().map(|f| f.log_pdf(y)).collect();
        self.update_with(&ll).map_err(|_| Error::Support(y.y))
    }

    /// `log(f^n / f*^n)` for each member.
    pub fn log_rel_lik(&self) -> Vec<f64> {
        let s = self.log_lik[self.fstar_index];
        self.log_lik.iter().map(|l| l - s).collect()
    }

    /// Normalized posterior weights.
    pub fn weights(&self) -> Vec<f64> {
        let lp: Vec<f64> = self
            .log_prior
            .iter()
            .zip(&self.log_lik)
            .map(|(a, b)| a + b)
            .collect();
        let z = log_sum_exp(lp.iter().copied());
        lp.iter().map(|x| (x - z).exp()).collect()
    }

    /// `log(fhat^n / f*^n)` where `fhat^n` is the prior-predictive density.
    pub fn log_denominator(&self) -> f64 {
        let z = log_sum_exp(
            self.log_prior
                .iter()
                .zip(&self.log_lik)
                .map(|(a, b)| a + b),
        );
        z - self.log_lik[self.fstar_index]
    }

    /// Posterior mass of the members flagged in `mask`.
    pub fn mass(&self, mask: &[bool]) -> f64 {
        let lp = || {
            self.log_prior
                .iter()
                .zip(&self.log_lik)
                .map(|(a, b)| a + b)
        };
        let z = log_sum_exp(lp());
        let sel = log_sum_exp(lp().zip(mask).map(|(x, &m)| if m { x } else { f64::NEG_INFINITY }));
        (sel - z).exp()
    }
}

/// Per-member distances to `f*` plus weak-topology functionals
/// `int phi_k f dmu0` for each test function `k`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Geometry {
    pub dist: Vec<f64>,
    pub weak: Vec<Vec<f64>>,
}

impl Geometry {
    pub fn from_metric<M>(n: usize, metric: M) -> Result<Self>
    where
        M: Fn(usize) -> Result<f64> + Sync,
    {
        let dist: Vec<f64> = (0..n).into_par_iter().map(&metric).collect::<Result<_>>()?;
        if let Some(member) = dist.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Metric { member });
        }
        Ok(Geometry {
            dist,
            weak: Vec::new(),
        })
    }

    /// Adds one weak functional per test function: `E0[phi f / f*]`.
    pub fn with_weak<T>(
        mut self,
        f0: &Density,
        family: &FiniteFamily,
        fstar: &Density,
        tests: &[T],
        tol: f64,
    ) -> Result<Self>
    where
        T: Fn(f64) -> f64 + Sync,
    {
        for phi in tests {
            let vals: Vec<f64> = family
                .members
                .par_iter()
                .map(|f| {
                    f0.expect(
                        |p| phi(p.y) * (f.log_pdf(p) - fstar.log_pdf(p)).exp(),
                        &[f.breakpoints(), fstar.breakpoints()].concat(),
                        tol,
                    )
                    .map(|q| q.value)
                })
                .collect::<Result<_>>()?;
            self.weak.push(vals);
        }
        Ok(self)
    }
}

/// A set of members whose posterior mass is tracked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionQuery {
    /// `{f : d(f, f*) >= eps}`
    BallComplement { eps: f64 },
    /// `{f : j eps <= d(f, f*) < (j+1) eps}`
    Shell { j: usize, eps: f64 },
    /// Outside the weak neighborhood `|int phi_k (f - f*) dmu0| < eps_k`.
    WeakComplement { eps: Vec<f64> },
}

impl RegionQuery {
    pub fn id(&self) -> String {
        match self {
            RegionQuery::BallComplement { eps } => format!("ball_complement(eps={eps})"),
            RegionQuery::Shell { j, eps } => format!("shell(j={j},eps={eps})"),
            RegionQuery::WeakComplement { eps } => format!(
                "weak_complement(eps=[{}])",
                eps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";")
            ),
        }
    }

    pub fn mask(&self, geo: &Geometry, fstar_index: usize) -> Result<Vec<bool>> {
        let n = geo.dist.len().max(geo.weak.first().map_or(0, |w| w.len()));
        match self {
            RegionQuery::BallComplement { eps } => {
                Ok(geo.dist.iter().map(|d| *d >= *eps).collect())
            }
            RegionQuery::Shell { j, eps } => {
                let (lo, hi) = (*j as f64 * eps, (*j + 1) as f64 * eps);
                Ok(geo.dist.iter().map(|d| *d >= lo && *d < hi).collect())
            }
            RegionQuery::WeakComplement { eps } => {
                if eps.len() != geo.weak.len() {
                    return Err(Error::Config(format!(
                        "{} tolerances for {} test functions",
                        eps.len(),
                        geo.weak.len()
                    )));
                }
                Ok((0..n)
                    .map(|m| {
                        geo.weak
                            .iter()
                            .zip(eps)
                            .any(|(w, e)| (w[m] - w[fstar_index]).abs() >= *e)
                    })
                    .collect())
            }
        }
    }
}

pub fn region_mass(state: &PosteriorState, query: &RegionQuery, geo: &Geometry) -> Result<f64> {
    Ok(state.mass(&query.mask(geo, state.fstar_index)?))
}

/// Settings for [`run_trajectory`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub n_max: usize,
    pub seed: u64,
    pub reps: usize,
    /// Record every `every`-th step (and always the last).
    pub every: usize,
}

/// Simulates `reps` posterior paths and records each query's mass plus the
/// log-denominator at every recorded step.
///
/// With no queries a single `denominator` row per step is written.
pub fn run_trajectory(
    f0: &Density,
    family: &FiniteFamily,
    fstar_index: usize,
    geo: &Geometry,
    queries: &[RegionQuery],
    cfg: &TrajectoryConfig,
    config_echo: Value,
) -> Result<ExperimentReport> {
    let masks: Vec<Vec<bool>> = queries
        .iter()
        .map(|q| q.mask(geo, fstar_index))
        .collect::<Result<_>>()?;
    let ids: Vec<String> = queries.iter().map(|q| q.id()).collect();
    let per_rep: Vec<Vec<Vec<Value>>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<Vec<Value>>> {
            let mut rng = rng::stream(cfg.seed, rep as u64);
            let mut st = PosteriorState::new(&family.prior, fstar_index)?;
            let mut rows = Vec::new();
            for n in 1..=cfg.n_max {
                let y = f0.sample(&mut rng);
                st.update(family, &y)?;
                if n % cfg.every.max(1) != 0 && n != cfg.n_max {
                    continue;
                }
                let ld = st.log_denominator();
                let mut push = |id: &str, mass: Value| {
                    let mut r = Vec::with_capacity(6);
                    if cfg.reps > 1 {
                        r.push(json!(rep));
                    }
                    r.extend([json!(n), json!(id), mass, num(ld), json!(cfg.seed)]);
                    rows.push(r);
                };
                if queries.is_empty() {
                    push("denominator", Value::Null);
                }
                for (id, m) in ids.iter().zip(&masks) {
                    push(id, num(st.mass(m)));
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut cols = vec!["n", "query_id", "mass", "log_denominator", "seed"];
    if cfg.reps > 1 {
        cols.insert(0, "replication");
    }
    let mut report = ExperimentReport::new("trajectory", config_echo, &cols);
    for rows in per_rep {
        for r in rows {
            report.push(r);
        }
    }
    Ok(report)
}

/// `log(fhat^n / f*^n) + n beta` for each recorded step of a trajectory
/// report; one column per `beta`.
pub fn denominator_growth(report: &ExperimentReport, betas: &[f64]) -> Vec<(usize, Vec<f64>)> {
    let (Some(ni), Some(li)) = (report.column("n"), report.column("log_denominator")) else {
        return Vec::new();
    };
    let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
    for r in &report.rows {
        let n = r[ni].as_u64().unwrap_or(0) as usize;
        let ld = r[li].as_f64().unwrap_or(f64::NAN);
        if out.last().is_some_and(|(m, _)| *m == n) {
            continue;
        }
        out.push((n, betas.iter().map(|b| ld + n as f64 * b).collect()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_specified_single_step() {
        // Unif(0,1) and Unif(0,2) with equal prior; y = 0.5 doubles the
        // odds of the first.
        let fam = FiniteFamily::uniform(vec![
            Density::uniform(0.0, 1.0).unwrap(),
            Density::uniform(0.0, 2.0).unwrap(),
        ])
        .unwrap();
        let mut st = PosteriorState::new(&fam.prior, 0).unwrap();
        st.update(&fam, &Point::lebesgue(0.5)).unwrap();
        let w = st.weights();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((st.log_denominator() - 0.75f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn observation_outside_every_support() {
        let fam = FiniteFamily::uniform(vec![Density::uniform(0.0, 1.0).unwrap()]).unwrap();
        let mut st = PosteriorState::new(&fam.prior, 0).unwrap();
        assert_eq!(st.update(&fam, &Point::lebesgue(3.0)), Err(Error::Support(3.0)));
    }

    #[test]
    fn nan_metric_is_rejected() {
        let r = Geometry::from_metric(3, |m| Ok(if m == 1 { f64::NAN } else { 0.0 }));
        assert_eq!(r, Err(Error::Metric { member: 1 }));
    }

    #[test]
    fn shells_partition_the_complement() {
        let geo = Geometry {
            dist: vec![0.0, 0.05, 0.12, 0.25, 0.31],
            weak: vec![],
        };
        let st = PosteriorState {
            log_prior: vec![(0.2f64).ln(); 5],
            log_lik: vec![0.0, -1.0, -2.0, -0.5, -3.0],
            fstar_index: 0,
            n: 3,
        };
        let eps = 0.1;
        let total = region_mass(&st, &RegionQuery::BallComplement { eps }, &geo).unwrap();
        let shells: f64 = (1..5)
            .map(|j| region_mass(&st, &RegionQuery::Shell { j, eps }, &geo).unwrap())
            .sum();
        assert!((total - shells).abs() < 1e-15);
    }

    #[test]
    fn empty_query_list_gives_denominator_rows() {
        let f0 = Density::uniform(0.0, 1.0).unwrap();
        let fam = FiniteFamily::uniform(vec![f0.clone()]).unwrap();
        let geo = Geometry::from_metric(1, |_| Ok(0.0)).unwrap();
        let cfg = TrajectoryConfig {
            n_max: 5,
            seed: 1,
            reps: 1,
            every: 1,
        };
        let r = run_trajectory(&f0, &fam, 0, &geo, &[], &cfg, Value::Null).unwrap();
        assert_eq!(r.rows.len(), 5);
        assert_eq!(r.rows[0][1], json!("denominator"));
        assert_eq!(denominator_growth(&r, &[0.5])[4].1[0], 2.5);
    }
}
