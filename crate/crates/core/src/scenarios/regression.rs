//! Regression with a misspecified working likelihood:
//! `f_theta(y, x) = phi(y - theta(x)) g(x)` with `phi` standard normal or
//! asymmetric Laplace, true residual law `p0`, and `theta` on a polynomial
//! coefficient grid. The covariate density `g` cancels in every ratio, so
//! only conditional densities are ever evaluated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::family::FiniteFamily;
use crate::measure::integrate_interval;
use crate::poly::{coefficient_grid, linspace, Poly};
use crate::posterior::PosteriorState;
use crate::report::{num, ExperimentReport};
use crate::rng;

const LN_2PI_HALF: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressionKind {
    Normal,
    Ald { tau: f64 },
}

impl RegressionKind {
    /// Working log-density of a residual.
    pub fn log_pdf(&self, z: f64) -> f64 {
        match *self {
            RegressionKind::Normal => -0.5 * z * z - LN_2PI_HALF,
            RegressionKind::Ald { tau } => {
                let rho = if z <= 0.0 { (tau - 1.0) * z } else { tau * z };
                (tau * (1.0 - tau)).ln() - rho
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    pub kind: RegressionKind,
    /// Coefficients of the true regression function.
    pub theta0: Vec<f64>,
    /// Levels of each coefficient; the grid is their product.
    pub levels: Vec<Vec<f64>>,
    pub residual: Density,
    /// Covariate density on `[0, 1]`.
    pub design: Density,
    /// Uniform bound `M` on grid members over `[0, 1]`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionScenario {
    pub kind: RegressionKind,
    pub thetas: Vec<Poly>,
    pub theta0: Poly,
    pub residual: Density,
    pub design: Density,
    pub prior: Vec<f64>,
    pub fstar_index: usize,
    pub bound: f64,
}

/// Numeric probe of `E e^{M|Z|}`: the integral over `[-R, R]` must settle
/// as `R` doubles.
fn exponential_moment_probe(p0: &Density, m: f64) -> Result<()> {
    let f = |z: f64| (m * z.abs() + p0.log_pdf(&z.into())).exp();
    let mut prev: Option<f64> = None;
    for r in [10.0, 20.0, 40.0, 80.0] {
        let crude = integrate_interval(f, -r, r, f64::MAX)?.value;
        let q = integrate_interval(f, -r, r, 1e-9 * crude.abs().max(1.0)).map_err(|e| {
            Error::Moment(format!("{}: quadrature of E exp(M|Z|) failed at R = {r}: {e}", p0.label))
        })?;
        if let Some(p) = prev {
            let growth = (q.value - p) / p;
            if r == 80.0 && !(growth <= 1e-6) {
                return Err(Error::Moment(format!(
                    "{}: E exp(M|Z|) over [-R, R] still grows by {growth:e} at R = {r}",
                    p0.label
                )));
            }
        }
        prev = Some(q.value);
    }
    Ok(())
}

pub fn build_regression_scenario(cfg: &RegressionConfig) -> Result<RegressionScenario> {
    if let RegressionKind::Ald { tau } = cfg.kind {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Domain {
                name: "tau",
                value: tau,
                domain: "(0, 1)",
            });
        }
    }
    if cfg.kind == RegressionKind::Normal {
        exponential_moment_probe(&cfg.residual, cfg.bound)?;
    }
    let thetas: Vec<Poly> = coefficient_grid(&cfg.levels)
        .into_iter()
        .map(Poly::new)
        .collect();
    if thetas.is_empty() {
        return Err(Error::Config("empty theta grid".into()));
    }
    let xs = linspace(0.0, 1.0, 1001);
    for (i, t) in thetas.iter().enumerate() {
        if xs.iter().any(|&x| t.eval(x).abs() > cfg.bound) {
            return Err(Error::Config(format!(
                "grid member {i} exceeds the bound {}",
                cfg.bound
            )));
        }
    }
    let theta0 = Poly::new(cfg.theta0.clone());
    let fstar_index = thetas
        .iter()
        .position(|t| {
            let d = t.sub(&theta0);
            d.coef.iter().all(|c| c.abs() < 1e-12)
        })
        .ok_or_else(|| Error::Config("theta0 must be a grid member".into()))?;
    let n = thetas.len();
    Ok(RegressionScenario {
        kind: cfg.kind,
        thetas,
        theta0,
        residual: cfg.residual.clone(),
        design: cfg.design.clone(),
        prior: vec![1.0 / n as f64; n],
        fstar_index,
        bound: cfg.bound,
    })
}

impl RegressionScenario {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn log_lik(&self, m: usize, x: f64, y: f64) -> f64 {
        self.kind.log_pdf(y - self.thetas[m].eval(x))
    }

    /// Members as conditional densities of `Y` given `X = x`.
    pub fn conditional_family(&self, x: f64) -> Result<FiniteFamily> {
        let members = self
            .thetas
            .iter()
            .map(|t| match self.kind {
                RegressionKind::Normal => Density::normal(t.eval(x), 1.0),
                RegressionKind::Ald { tau } => Density::ald(tau, t.eval(x)),
            })
            .collect::<Result<_>>()?;
        FiniteFamily::new(members, self.prior.clone())
    }

    pub fn sample(&self, rng: &mut rng::Stream) -> (f64, f64) {
        let x = self.design.sample(rng).y;
        let z = self.residual.sample(rng).y;
        (x, self.theta0.eval(x) + z)
    }

    /// `E0 h(X, Y)` by nested quadrature; `kinks(x)` lists residual values
    /// where `h(x, theta0(x) + z)` is not smooth in `z`.
    pub fn expect<H, K>(&self, h: H, kinks: K, tol: f64) -> Result<f64>
    where
        H: Fn(f64, f64) -> f64 + Sync,
        K: Fn(f64) -> Vec<f64> + Sync,
    {
        let inner = |x: f64| -> f64 {
            let t0 = self.theta0.eval(x);
            self.residual
                .expect(|p| h(x, t0 + p.y), &kinks(x), 0.1 * tol)
                .map_or(f64::NAN, |q| q.value)
        };
        Ok(self.design.expect(|p| inner(p.y), &[], tol)?.value)
    }

    fn kinks_for(&self, ms: &[usize]) -> impl Fn(f64) -> Vec<f64> + Sync + '_ {
        let ms = ms.to_vec();
        move |x: f64| {
            let t0 = self.theta0.eval(x);
            ms.iter().map(|&m| self.thetas[m].eval(x) - t0).collect()
        }
    }

    /// `E0 (f_m / f*)^alpha`.
    pub fn affinity(&self, m: usize, alpha: f64, tol: f64) -> Result<f64> {
        let s = self.fstar_index;
        self.expect(
            |x, y| (alpha * (self.log_lik(m, x, y) - self.log_lik(s, x, y))).exp(),
            self.kinks_for(&[m, s]),
            tol,
        )
    }

    /// `E0 [(log f_m/f*)^2 (f_m/f*)^xi]`, the Taylor remainder integrand.
    pub fn remainder_moment(&self, m: usize, xi: f64, tol: f64) -> Result<f64> {
        let s = self.fstar_index;
        self.expect(
            |x, y| {
                let l = self.log_lik(m, x, y) - self.log_lik(s, x, y);
                l * l * (xi * l).exp()
            },
            self.kinks_for(&[m, s]),
            tol,
        )
    }

    /// `E0 log(f*/f_m)`.
    pub fn kl_excess(&self, m: usize, tol: f64) -> Result<f64> {
        let s = self.fstar_index;
        self.expect(
            |x, y| self.log_lik(s, x, y) - self.log_lik(m, x, y),
            self.kinks_for(&[m, s]),
            tol,
        )
    }

    /// `E0 |f_i/f* - f_j/f*|`.
    pub fn weighted_l1(&self, i: usize, j: usize, tol: f64) -> Result<f64> {
        let s = self.fstar_index;
        self.expect(
            |x, y| {
                let ls = self.log_lik(s, x, y);
                ((self.log_lik(i, x, y) - ls).exp() - (self.log_lik(j, x, y) - ls).exp()).abs()
            },
            self.kinks_for(&[i, j, s]),
            tol,
        )
    }

    /// Root mean square distance for the normal kind, mean absolute
    /// distance for the quantile kind, both under the covariate law.
    pub fn metric(&self, i: usize, j: usize, tol: f64) -> Result<f64> {
        let d = self.thetas[i].sub(&self.thetas[j]);
        match self.kind {
            RegressionKind::Normal => Ok(self
                .design
                .expect(|p| d.eval(p.y).powi(2), &[], tol)?
                .value
                .sqrt()),
            RegressionKind::Ald { .. } => {
                Ok(self.design.expect(|p| d.eval(p.y).abs(), &[], tol)?.value)
            }
        }
    }

    /// Posterior mass of `{d(theta, theta*) >= eps}` along simulated paths.
    pub fn run(&self, n_max: usize, reps: usize, seed: u64, eps: f64, every: usize) -> Result<ExperimentReport> {
        let dist: Vec<f64> = (0..self.len())
            .map(|m| self.metric(m, self.fstar_index, 1e-10))
            .collect::<Result<_>>()?;
        let mask: Vec<bool> = dist.iter().map(|d| *d >= eps).collect();
        let paths: Vec<Vec<Vec<Value>>> = (0..reps)
            .into_par_iter()
            .map(|rep| -> Result<Vec<Vec<Value>>> {
                let mut r = rng::stream(seed, rep as u64);
                let mut st = PosteriorState::new(&self.prior, self.fstar_index)?;
                let mut rows = Vec::new();
                for n in 1..=n_max {
                    let (x, y) = self.sample(&mut r);
                    let ll: Vec<f64> = (0..self.len()).map(|m| self.log_lik(m, x, y)).collect();
                    st.update_with(&ll)?;
                    if n % every.max(1) == 0 || n == n_max {
                        rows.push(vec![
                            json!(rep),
                            json!(n),
                            json!(format!("ball_complement(eps={eps})")),
                            num(st.mass(&mask)),
                            num(st.log_denominator()),
                            json!(seed),
                        ]);
                    }
                }
                Ok(rows)
            })
            .collect::<Result<_>>()?;
        let mut rep = ExperimentReport::new(
            "regression",
            json!({"kind": self.kind, "n_max": n_max, "replications": reps, "seed": seed, "eps": eps}),
            &["replication", "n", "query_id", "mass", "log_denominator", "seed"],
        );
        paths.into_iter().flatten().for_each(|r| rep.push(r));
        Ok(rep)
    }
}

/// Signed slack of the ALD ratio bound `|log f_t1/f_t2| <= |t1 - t2|` over
/// a sample of `(x, y)` pairs: `max |log ratio| - sup_x |theta1 - theta2|`,
/// with the supremum over a 1001-point grid and the sample's `x` values.
pub fn ald_ratio_bound_test(
    scn: &RegressionScenario,
    i: usize,
    j: usize,
    sample: &[(f64, f64)],
) -> f64 {
    let d = scn.thetas[i].sub(&scn.thetas[j]);
    let sup = linspace(0.0, 1.0, 1001)
        .into_iter()
        .chain(sample.iter().map(|s| s.0))
        .map(|x| d.eval(x).abs())
        .fold(0.0, f64::max);
    let lhs = sample
        .iter()
        .map(|&(x, y)| (scn.log_lik(i, x, y) - scn.log_lik(j, x, y)).abs())
        .fold(0.0, f64::max);
    lhs - sup
}

/// Pointwise version: `max_k (|log ratio_k| - |theta1(x_k) - theta2(x_k)|)`.
pub fn ald_ratio_pointwise_slack(
    scn: &RegressionScenario,
    i: usize,
    j: usize,
    sample: &[(f64, f64)],
) -> f64 {
    sample
        .iter()
        .map(|&(x, y)| {
            (scn.log_lik(i, x, y) - scn.log_lik(j, x, y)).abs()
                - (scn.thetas[i].eval(x) - scn.thetas[j].eval(x)).abs()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Quantile-regression separation: for each member,
/// `(E0 |f/f* - 1|, C0 min(tau, 1-tau) E0 |theta - theta*|)` with
/// `C0 = (1 - e^{-min(tau,1-tau) D}) / D` and `D` the largest sup-distance
/// to `theta*` on the grid.
pub fn ald_separation(scn: &RegressionScenario, tol: f64) -> Result<Vec<(f64, f64)>> {
    let RegressionKind::Ald { tau } = scn.kind else {
        return Err(Error::Config("separation check needs the quantile kind".into()));
    };
    let s = scn.fstar_index;
    let xs = linspace(0.0, 1.0, 1001);
    let dmax = scn
        .thetas
        .iter()
        .flat_map(|t| xs.iter().map(move |&x| (t.eval(x) - scn.thetas[s].eval(x)).abs()))
        .fold(0.0, f64::max);
    let c = tau.min(1.0 - tau);
    let c0 = if dmax > 0.0 { (1.0 - (-c * dmax).exp()) / dmax } else { c };
    (0..scn.len())
        .into_par_iter()
        .map(|m| {
            let lhs = scn.weighted_l1(m, s, tol)?;
            let rhs = c0 * c * scn.metric(m, s, tol)?;
            Ok((lhs, rhs))
        })
        .collect()
}

/// Normal-regression affinity bound. Returns `(C, alpha, bound, values)`
/// where `C` is twice the largest remainder moment over members and
/// `xi` in `[0, 1]`, `alpha = eps^2 / C`, `bound = e^{-eps^4 / (2C)}`, and
/// `values` lists `(member, d, E0 (f/f*)^alpha)` for members with `d > eps`.
pub fn normal_affinity_bound(
    scn: &RegressionScenario,
    eps: f64,
    tol: f64,
) -> Result<(f64, f64, f64, Vec<(usize, f64, f64)>)> {
    if scn.kind != RegressionKind::Normal {
        return Err(Error::Config("affinity bound needs the normal kind".into()));
    }
    let s = scn.fstar_index;
    let cmax = (0..scn.len())
        .into_par_iter()
        .map(|m| {
            linspace(0.0, 1.0, 11)
                .into_iter()
                .map(|xi| scn.remainder_moment(m, xi, tol))
                .try_fold(0.0f64, |a, v| v.map(|v| a.max(v)))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    let c = 2.0 * cmax;
    let alpha = eps * eps / c;
    let bound = (-eps.powi(4) / (2.0 * c)).exp();
    let values = (0..scn.len())
        .into_par_iter()
        .map(|m| -> Result<Option<(usize, f64, f64)>> {
            let d = scn.metric(m, s, tol)?;
            if d > eps {
                Ok(Some((m, d, scn.affinity(m, alpha, tol)?)))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok((c, alpha, bound, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ald_cfg(levels: Vec<Vec<f64>>) -> RegressionConfig {
        RegressionConfig {
            kind: RegressionKind::Ald { tau: 0.5 },
            theta0: vec![0.3, 0.4],
            levels,
            residual: Density::normal(0.0, 1.0).unwrap(),
            design: Density::uniform(0.0, 1.0).unwrap(),
            bound: 5.0,
        }
    }

    #[test]
    fn fstar_is_theta0() {
        let s = build_regression_scenario(&ald_cfg(vec![vec![0.1, 0.3, 0.5], vec![0.0, 0.4]])).unwrap();
        assert_eq!(s.thetas[s.fstar_index].coef, vec![0.3, 0.4]);
        // theta0 is the KL minimizer over the grid.
        let k: Vec<f64> = (0..s.len()).map(|m| s.kl_excess(m, 1e-9).unwrap()).collect();
        assert!(k.iter().all(|v| *v >= -1e-9), "{k:?}");
    }

    #[test]
    fn student_t_residuals_fail_the_moment_probe() {
        let mut cfg = ald_cfg(vec![vec![0.3], vec![0.4]]);
        cfg.kind = RegressionKind::Normal;
        cfg.residual = Density::student_t(3.0, 0.0, 1.0).unwrap();
        assert!(matches!(build_regression_scenario(&cfg), Err(Error::Moment(_))));
        cfg.residual = Density::normal(0.0, 1.0).unwrap();
        assert!(build_regression_scenario(&cfg).is_ok());
    }

    #[test]
    fn constant_shift_ratio_bound() {
        let s = build_regression_scenario(&ald_cfg(vec![vec![0.0, 0.3], vec![0.4]])).unwrap();
        let sample: Vec<(f64, f64)> = (0..200)
            .map(|i| (i as f64 / 199.0, -3.0 + 6.0 * i as f64 / 199.0))
            .collect();
        let slack = ald_ratio_bound_test(&s, 0, 1, &sample);
        assert!(slack <= 1e-12);
        assert_eq!(ald_ratio_bound_test(&s, 1, 1, &sample), 0.0);
    }

    #[test]
    fn separation_display_holds() {
        let s = build_regression_scenario(&ald_cfg(vec![vec![-0.2, 0.3, 0.8], vec![-0.1, 0.4, 0.9]])).unwrap();
        for (lhs, rhs) in ald_separation(&s, 1e-8).unwrap() {
            assert!(lhs >= rhs - 1e-9, "{lhs} < {rhs}");
        }
    }

    #[test]
    fn normal_affinity_bound_on_grid() {
        let mut cfg = ald_cfg(vec![vec![-0.2, 0.3, 0.8], vec![0.0, 0.4, 0.8]]);
        cfg.kind = RegressionKind::Normal;
        let s = build_regression_scenario(&cfg).unwrap();
        let (c, alpha, bound, vals) = normal_affinity_bound(&s, 0.3, 1e-9).unwrap();
        assert!(c > 0.0 && alpha > 0.0 && !vals.is_empty());
        for (m, d, h) in vals {
            assert!(h <= bound, "member {m} at d = {d}: {h} > {bound}");
        }
    }
}
