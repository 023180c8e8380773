//! Independent, non-identically distributed responses along a fixed covariate
//! design: `Y_i = theta0(x_i) + Z_i` with a location working likelihood
//! `f_t(y) = phi(y - t)`, and a prior over a gridded class of polynomial
//! regression functions under the sup-norm.

use std::collections::HashMap;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::checkers::{AssumptionWitness, Verdict};
use crate::density::Density;
use crate::error::{domain, Error, Result};
use crate::poly::{coefficient_grid, linspace, Poly};
use crate::posterior::PosteriorState;
use crate::report::{num, ExperimentReport};
use crate::rng;
use crate::scenarios::RegressionKind;

/// Deterministic covariate sequence in a compact interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub points: Vec<f64>,
    pub domain: (f64, f64),
}

/// Ways to produce a [`Design`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    /// `x_i = ((i * stride) mod m) / (m - 1)` for `i = 1, 2, ...`: walks the
    /// `m`-point lattice on `[0, 1]`, visiting every node once per cycle.
    Cyclic { m: usize, stride: usize },
    /// `a, b, a, b, ...`
    Alternating { a: f64, b: f64 },
    /// One x value per line, optional header, read from a CSV file.
    Csv { path: String },
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Design {
    pub fn new(points: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        if !(domain.0 < domain.1) {
            return Err(Error::Config(format!("empty design domain {domain:?}")));
        }
        if let Some(x) = points
            .iter()
            .find(|x| !(x.is_finite() && **x >= domain.0 && **x <= domain.1))
        {
            return Err(domain_err(*x, domain));
        }
        Ok(Design { points, domain })
    }

    pub fn cyclic(m: usize, stride: usize, n: usize) -> Result<Self> {
        if m < 2 || gcd(stride % m, m) != 1 {
            return Err(Error::Config(format!(
                "cyclic design needs m >= 2 and stride coprime to m (m = {m}, stride = {stride})"
            )));
        }
        let pts = (1..=n)
            .map(|i| ((i * stride) % m) as f64 / (m - 1) as f64)
            .collect();
        Design::new(pts, (0.0, 1.0))
    }

    pub fn alternating(a: f64, b: f64, n: usize) -> Result<Self> {
        let pts = (0..n).map(|i| if i % 2 == 0 { a } else { b }).collect();
        Design::new(pts, (a.min(b).min(0.0), a.max(b).max(1.0)))
    }

    /// Reads x values from the first column; a non-numeric first row is
    /// taken as a header.
    pub fn from_csv<R: Read>(r: R, domain: (f64, f64)) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .from_reader(r);
        let mut pts = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
            let Some(field) = rec.get(0) else { continue };
            match field.trim().parse::<f64>() {
                Ok(x) => pts.push(x),
                Err(_) if i == 0 => {}
                Err(_) => {
                    return Err(Error::Config(format!("design row {}: {field:?} is not a number", i + 1)))
                }
            }
        }
        Design::new(pts, domain)
    }

    pub fn from_spec(spec: &DesignSpec, n: usize) -> Result<Self> {
        match spec {
            DesignSpec::Cyclic { m, stride } => Design::cyclic(*m, *stride, n),
            DesignSpec::Alternating { a, b } => Design::alternating(*a, *b, n),
            DesignSpec::Csv { path } => {
                let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
                let d = Design::from_csv(f, (0.0, 1.0))?;
                if d.len() < n {
                    return Err(Error::Config(format!(
                        "design file {path} has {} points, {n} needed",
                        d.len()
                    )));
                }
                Ok(d)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distinct values among the first `n` points with their counts.
    fn distinct(&self, n: usize) -> Vec<(f64, usize)> {
        let mut m: HashMap<u64, usize> = HashMap::new();
        for x in &self.points[..n.min(self.len())] {
            *m.entry(x.to_bits()).or_default() += 1;
        }
        let mut v: Vec<(f64, usize)> = m.into_iter().map(|(b, c)| (f64::from_bits(b), c)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }
}

fn domain_err(x: f64, d: (f64, f64)) -> Error {
    Error::Config(format!("design point {x} outside [{}, {}]", d.0, d.1))
}

/// `max |theta1 - theta2|` over `grid`.
pub fn sup_norm(theta1: &Poly, theta2: &Poly, grid: &[f64]) -> f64 {
    let d = theta1.sub(theta2);
    grid.iter().map(|&x| d.eval(x).abs()).fold(0.0, f64::max)
}

/// Gridded polynomial regression functions bounded by `bound` on the
/// evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionClass {
    pub members: Vec<Poly>,
    pub eval_grid: Vec<f64>,
    pub bound: f64,
    /// Largest sup-norm change from moving one coefficient one level.
    pub resolution: f64,
}

impl FunctionClass {
    pub fn from_levels(levels: &[Vec<f64>], bound: f64, domain: (f64, f64)) -> Result<Self> {
        let eval_grid = linspace(domain.0, domain.1, 1001);
        let members: Vec<Poly> = coefficient_grid(levels).into_iter().map(Poly::new).collect();
        if members.is_empty() {
            return Err(Error::Config("empty function class".into()));
        }
        if let Some(i) = members
            .iter()
            .position(|p| eval_grid.iter().any(|&x| p.eval(x).abs() > bound))
        {
            return Err(Error::Config(format!("class member {i} exceeds the bound {bound}")));
        }
        let reach = domain.0.abs().max(domain.1.abs());
        let resolution = levels
            .iter()
            .enumerate()
            .map(|(j, lv)| {
                let mut s = lv.clone();
                s.sort_by(f64::total_cmp);
                let step = s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
                step * reach.powi(j as i32)
            })
            .fold(0.0, f64::max);
        Ok(FunctionClass {
            members,
            eval_grid,
            bound,
            resolution,
        })
    }

    /// Coefficient box `|a_0| <= 1`, `|a_j| <= 1/j^3`, with `per_coef`
    /// equispaced levels each, on `[0, 1]`.
    pub fn decaying_box(degree: usize, per_coef: usize) -> Result<Self> {
        let levels: Vec<Vec<f64>> = (0..=degree)
            .map(|j| {
                let r = if j == 0 { 1.0 } else { 1.0 / (j as f64).powi(3) };
                linspace(-r, r, per_coef)
            })
            .collect();
        let bound = 1.0 + (1..=degree).map(|j| 1.0 / (j as f64).powi(3)).sum::<f64>();
        FunctionClass::from_levels(&levels, bound + 1e-12, (0.0, 1.0))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn sup_dist(&self, i: usize, j: usize) -> f64 {
        sup_norm(&self.members[i], &self.members[j], &self.eval_grid)
    }

    /// Coefficient-wise decay `|a_j| <= 1/j^3` for `j >= 1`.
    pub fn has_decaying_coefficients(&self) -> bool {
        self.members.iter().all(|p| {
            p.coef
                .iter()
                .enumerate()
                .skip(1)
                .all(|(j, a)| a.abs() <= 1.0 / (j as f64).powi(3) + 1e-12)
        })
    }
}

/// Design coverage of `A = {x : |x - x0| < delta_prime}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignStats {
    pub x0: f64,
    pub delta_prime: f64,
    pub n0: usize,
    /// `fractions[n - 1]` is the share of `x_1..x_n` inside `A`.
    pub fractions: Vec<f64>,
    /// Minimum of the fractions over `n0..=n_max`, standing in for the
    /// liminf.
    pub kappa_hat: f64,
    pub final_fraction: f64,
    pub positive: bool,
}

pub fn kappa(design: &Design, x0: f64, delta_prime: f64, n0: usize, n_max: usize) -> Result<DesignStats> {
    if n0 == 0 {
        return Err(domain("n0", 0.0, "n0 >= 1"));
    }
    if n_max > design.len() || n0 > n_max {
        return Err(Error::Config(format!(
            "need n0 <= n_max <= {} (got n0 = {n0}, n_max = {n_max})",
            design.len()
        )));
    }
    let mut inside = 0usize;
    let fractions: Vec<f64> = design.points[..n_max]
        .iter()
        .enumerate()
        .map(|(i, x)| {
            inside += usize::from((x - x0).abs() < delta_prime);
            inside as f64 / (i + 1) as f64
        })
        .collect();
    let kappa_hat = fractions[n0 - 1..].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DesignStats {
        x0,
        delta_prime,
        n0,
        final_fraction: fractions[n_max - 1],
        fractions,
        kappa_hat,
        positive: kappa_hat > 0.0,
    })
}

/// Per-point lower bounds `delta_x` on `E_x log f_{theta*}/f_t` for
/// `|t - theta*(x)| >= eps`, valid for check-loss (asymmetric Laplace)
/// working likelihoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileKLBound {
    pub eps: f64,
    pub xs: Vec<f64>,
    pub delta_x: Vec<f64>,
}

impl QuantileKLBound {
    pub fn min(&self) -> f64 {
        self.delta_x.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `delta_x = (eps/2) min{P(0 < Y - theta* < eps/2), P(-eps/2 < Y - theta* < 0)}`
/// with `Y = theta0(x) + Z`.
pub fn quantile_kl_bound(
    residual: &Density,
    theta0: &Poly,
    thetastar: &Poly,
    xs: &[f64],
    eps: f64,
) -> QuantileKLBound {
    let delta_x = xs
        .iter()
        .map(|&x| {
            let s = theta0.eval(x) - thetastar.eval(x);
            let f = |z: f64| residual.cdf(z);
            let above = f(0.5 * eps - s) - f(-s);
            let below = f(-s) - f(-0.5 * eps - s);
            0.5 * eps * above.min(below)
        })
        .collect();
    QuantileKLBound {
        eps,
        xs: xs.to_vec(),
        delta_x,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InidConfig {
    pub kind: RegressionKind,
    pub theta0: Vec<f64>,
    /// Coefficient levels; `None` selects the decaying box of degree 6
    /// with 3 levels per coefficient.
    #[serde(default)]
    pub levels: Option<Vec<Vec<f64>>>,
    pub bound: f64,
    pub residual: Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InidScenario {
    pub kind: RegressionKind,
    pub class: FunctionClass,
    pub residual: Density,
    pub theta0: Poly,
    pub fstar_index: usize,
    pub prior: Vec<f64>,
}

pub fn build_inid_scenario(cfg: &InidConfig) -> Result<InidScenario> {
    if let RegressionKind::Ald { tau } = cfg.kind {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(domain("tau", tau, "(0, 1)"));
        }
        // The projection is theta0 exactly when the residual's tau-quantile is 0.
        let c = cfg.residual.cdf(0.0);
        if (c - tau).abs() > 1e-8 {
            return Err(Error::Config(format!(
                "residual tau-quantile is not 0 (P(Z <= 0) = {c}, tau = {tau})"
            )));
        }
    } else {
        let m = cfg.residual.expect(|p| p.y, &[], 1e-10)?.value;
        if m.abs() > 1e-8 {
            return Err(Error::Config(format!("residual mean {m} is not 0")));
        }
    }
    let class = match &cfg.levels {
        Some(lv) => FunctionClass::from_levels(lv, cfg.bound, (0.0, 1.0))?,
        None => FunctionClass::decaying_box(6, 3)?,
    };
    let theta0 = Poly::new(cfg.theta0.clone());
    let fstar_index = class
        .members
        .iter()
        .position(|t| t.sub(&theta0).coef.iter().all(|c| c.abs() < 1e-12))
        .ok_or_else(|| Error::Config("theta0 must be a class member".into()))?;
    let n = class.len();
    Ok(InidScenario {
        kind: cfg.kind,
        class,
        residual: cfg.residual.clone(),
        theta0,
        fstar_index,
        prior: vec![1.0 / n as f64; n],
    })
}

/// A member at sup-distance above `eps` from `theta*`, with the design
/// neighborhood on which it stays `eps/2` away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarMember {
    pub index: usize,
    pub sup_dist: f64,
    pub x0: f64,
    pub lipschitz: f64,
    pub delta_prime: f64,
    /// `|theta' - theta*| >= eps/2` at every eval-grid point of the
    /// neighborhood.
    pub lemma_ok: bool,
}

/// Far member coverage and decay at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub index: usize,
    pub kappa_hat: f64,
    pub delta: f64,
    pub alpha_prime: f64,
    /// `(1/n) sum_i log E_{x_i} (f_{theta'} / f_{theta*})^{alpha'}`
    pub slope: f64,
    pub bound: f64,
    pub holds: bool,
}

impl InidScenario {
    pub fn thetastar(&self) -> &Poly {
        &self.class.members[self.fstar_index]
    }

    pub fn log_lik(&self, m: usize, x: f64, y: f64) -> f64 {
        self.kind.log_pdf(y - self.class.members[m].eval(x))
    }

    /// `E_x h(Y)` for `Y = theta0(x) + Z`; `kinks` are values of `Y` where
    /// `h` is not smooth.
    pub fn expect_at<H>(&self, x: f64, h: H, kinks: &[f64], tol: f64) -> Result<f64>
    where
        H: Fn(f64) -> f64,
    {
        let t0 = self.theta0.eval(x);
        let zk: Vec<f64> = kinks.iter().map(|k| k - t0).collect();
        Ok(self.residual.expect(|p| h(t0 + p.y), &zk, tol)?.value)
    }

    /// `E_x log(f_t / f_{t'})` for locations `t`, `t'`.
    pub fn log_ratio_at(&self, x: f64, t: f64, tp: f64, tol: f64) -> Result<f64> {
        self.expect_at(x, |y| self.kind.log_pdf(y - t) - self.kind.log_pdf(y - tp), &[t, tp], tol)
    }

    pub fn log_ratio_sq_at(&self, x: f64, t: f64, tp: f64, tol: f64) -> Result<f64> {
        self.expect_at(
            x,
            |y| (self.kind.log_pdf(y - t) - self.kind.log_pdf(y - tp)).powi(2),
            &[t, tp],
            tol,
        )
    }

    /// `E_x (f_t / f_{t'})^alpha`.
    pub fn affinity_at(&self, x: f64, t: f64, tp: f64, alpha: f64, tol: f64) -> Result<f64> {
        self.expect_at(
            x,
            |y| (alpha * (self.kind.log_pdf(y - t) - self.kind.log_pdf(y - tp))).exp(),
            &[t, tp],
            tol,
        )
    }

    pub fn far_members(&self, design: &Design, n: usize, eps: f64) -> Vec<FarMember> {
        let star = self.thetastar();
        let grid = &self.class.eval_grid;
        let h = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let reach = grid.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let xs: Vec<f64> = design.distinct(n).into_iter().map(|(x, _)| x).collect();
        (0..self.class.len())
            .filter_map(|m| {
                let d = self.class.members[m].sub(star);
                let sup = grid.iter().map(|&x| d.eval(x).abs()).fold(0.0, f64::max);
                if sup <= eps {
                    return None;
                }
                let x0 = xs
                    .iter()
                    .copied()
                    .max_by(|a, b| d.eval(*a).abs().total_cmp(&d.eval(*b).abs()))?;
                let dd = d.derivative();
                // Grid maximum of |d'| plus the gap a second-derivative
                // bound allows between grid points.
                let d2 = dd.derivative();
                let d2_max: f64 = d2
                    .coef
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c.abs() * reach.powi(j as i32))
                    .sum();
                let lipschitz = grid.iter().map(|&x| dd.eval(x).abs()).fold(0.0, f64::max) + h * d2_max;
                let margin = d.eval(x0).abs() - 0.5 * eps;
                let delta_prime = if margin <= 0.0 {
                    0.0
                } else if lipschitz > 0.0 {
                    margin / lipschitz
                } else {
                    f64::INFINITY
                };
                let lemma_ok = delta_prime > 0.0
                    && grid
                        .iter()
                        .filter(|&&x| (x - x0).abs() < delta_prime)
                        .all(|&x| d.eval(x).abs() >= 0.5 * eps);
                Some(FarMember {
                    index: m,
                    sup_dist: sup,
                    x0,
                    lipschitz,
                    delta_prime,
                    lemma_ok,
                })
            })
            .collect()
    }

    /// Checks `(1/n) sum log E_{x_i}(f_{theta'}/f_{theta*})^{alpha'} <= -kappa delta / 4`
    /// for every far member, with `alpha'` minimizing the left side over
    /// `alphas` and `delta` the smallest `eps/2`-separation KL bound on the
    /// member's design neighborhood.
    pub fn decay_check(
        &self,
        design: &Design,
        far: &[FarMember],
        n: usize,
        n0: usize,
        eps: f64,
        alphas: &[f64],
        tol: f64,
    ) -> Result<Vec<DecayRow>> {
        let counts = design.distinct(n);
        let star = self.thetastar();
        far.par_iter()
            .map(|fm| {
                let stats = kappa(design, fm.x0, fm.delta_prime, n0, n)?;
                let inside: Vec<f64> = counts
                    .iter()
                    .map(|c| c.0)
                    .filter(|x| (x - fm.x0).abs() < fm.delta_prime)
                    .collect();
                let delta = quantile_kl_bound(&self.residual, &self.theta0, star, &inside, 0.5 * eps).min();
                let theta = &self.class.members[fm.index];
                let mut best = (f64::NAN, f64::INFINITY);
                for &a in alphas {
                    let mut s = 0.0;
                    for &(x, c) in &counts {
                        let h = self.affinity_at(x, theta.eval(x), star.eval(x), a, tol)?;
                        s += c as f64 * h.ln();
                    }
                    let slope = s / n as f64;
                    if slope < best.1 {
                        best = (a, slope);
                    }
                }
                let bound = -stats.kappa_hat * delta / 4.0;
                Ok(DecayRow {
                    index: fm.index,
                    kappa_hat: stats.kappa_hat,
                    delta,
                    alpha_prime: best.0,
                    slope: best.1,
                    bound,
                    holds: stats.positive && delta > 0.0 && best.1 <= bound,
                })
            })
            .collect()
    }

    fn sample(&self, x: f64, r: &mut rng::Stream) -> f64 {
        self.theta0.eval(x) + self.residual.sample(r).y
    }
}

/// Probe grids for [`check_assumptions_cde`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub points: usize,
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            points: 20,
            tol: 1e-9,
        }
    }
}

/// Assumption C: sup-norm support of the prior at `theta*`; D: continuity
/// and square-integrability of per-point log ratios and affinities over a
/// probe grid; E: per-point KL neighborhoods sit inside `eps`-tubes, with
/// the uniform `delta` from [`quantile_kl_bound`]. Verdicts are certified
/// on the probe grids only.
pub fn check_assumptions_cde(scn: &InidScenario, eps: f64, probe: ProbeConfig) -> Result<Vec<AssumptionWitness>> {
    let tol = probe.tol;
    let p = probe.points.max(2);
    let star = scn.thetastar();
    let (lo, hi) = (scn.class.eval_grid[0], *scn.class.eval_grid.last().unwrap_or(&1.0));
    let xs = linspace(lo, hi, p);

    // C
    let atom = scn.prior[scn.fstar_index];
    let ball: f64 = (0..scn.class.len())
        .filter(|&m| scn.class.sup_dist(m, scn.fstar_index) < eps)
        .map(|m| scn.prior[m])
        .sum();
    let mut c = AssumptionWitness::new("C", if atom > 0.0 { Verdict::Holds } else { Verdict::Inconclusive });
    c.epsilon = Some(eps);
    c.certificate.insert("atom_mass".into(), atom);
    c.certificate.insert("ball_mass".into(), ball);

    // D
    let m = scn.class.bound;
    let ts = linspace(-m, m, p);
    let alphas = linspace(1.0 / p as f64, 1.0, p);
    let cells: Vec<(usize, usize, usize)> = (0..p)
        .flat_map(|i| (0..p).flat_map(move |j| (0..p).map(move |k| (i, j, k))))
        .collect();
    let vals: Vec<(f64, f64, Vec<f64>)> = cells
        .par_iter()
        .map(|&(i, j, k)| {
            let (x, t, tp) = (xs[i], ts[j], ts[k]);
            let l = scn.log_ratio_at(x, t, tp, tol)?;
            let q = scn.log_ratio_sq_at(x, t, tp, tol)?;
            let h = alphas
                .iter()
                .map(|&a| scn.affinity_at(x, t, tp, a, tol))
                .collect::<Result<Vec<f64>>>()?;
            Ok((l, q, h))
        })
        .collect::<Result<_>>()?;
    let at = |i: usize, j: usize, k: usize| &vals[(i * p + j) * p + k];
    let mut mod_log = 0.0f64;
    let mut mod_aff = 0.0f64;
    let mut sup_sq = 0.0f64;
    let mut ald_slack = f64::NEG_INFINITY;
    let mut finite = true;
    for &(i, j, k) in &cells {
        let v = at(i, j, k);
        finite &= v.0.is_finite() && v.1.is_finite() && v.2.iter().all(|h| h.is_finite());
        sup_sq = sup_sq.max(v.1);
        ald_slack = ald_slack.max(v.1 - (ts[j] - ts[k]).powi(2));
        for (di, dj, dk) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
            let (a, b, cc) = (i + di, j + dj, k + dk);
            if a < p && b < p && cc < p {
                let w = at(a, b, cc);
                mod_log = mod_log.max((w.0 - v.0).abs());
                for (h1, h2) in v.2.iter().zip(&w.2) {
                    mod_aff = mod_aff.max((h1 - h2).abs());
                }
            }
        }
        for a in 1..p {
            mod_aff = mod_aff.max((v.2[a] - v.2[a - 1]).abs());
        }
    }
    let is_ald = matches!(scn.kind, RegressionKind::Ald { .. });
    let d_verdict = if !finite || (is_ald && ald_slack > 1e-9) {
        Verdict::Fails
    } else {
        Verdict::Holds
    };
    let mut d = AssumptionWitness::new("D", d_verdict);
    d.certificate.insert("modulus_log".into(), mod_log);
    d.certificate.insert("modulus_affinity".into(), mod_aff);
    d.certificate.insert("sup_log_sq".into(), sup_sq);
    d.certificate.insert("probe_spacing_t".into(), ts[1] - ts[0]);
    if is_ald {
        d.certificate.insert("ald_bound_slack".into(), ald_slack);
    }

    // E
    let bound = quantile_kl_bound(&scn.residual, &scn.theta0, star, &xs, eps);
    let delta = bound.min();
    let mins: Vec<f64> = xs
        .par_iter()
        .map(|&x| {
            let s = star.eval(x);
            let far: Vec<f64> = [s - eps, s + eps]
                .into_iter()
                .chain(linspace(-m, m, 10 * p))
                .filter(|t| (t - s).abs() >= eps * (1.0 - 1e-12) && t.abs() <= m)
                .collect();
            far.iter()
                .map(|&t| scn.log_ratio_at(x, s, t, tol))
                .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))
        })
        .collect::<Result<_>>()?;
    let min_far = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let e_verdict = if !(delta > 0.0) {
        Verdict::Inconclusive
    } else if min_far >= delta {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let mut e = AssumptionWitness::new("E", e_verdict);
    e.epsilon = Some(eps);
    e.delta = Some(delta);
    e.certificate.insert("min_far_kl".into(), min_far);
    e.certificate.insert("delta".into(), delta);
    Ok(vec![c, d, e])
}

/// Runs `reps` posterior paths along the design and records the posterior
/// mass of `{theta : ||theta - theta*||_inf > eps}`.
pub fn inid_run(
    scn: &InidScenario,
    design: &Design,
    n_max: usize,
    eps: f64,
    reps: usize,
    seed: u64,
    every: usize,
) -> Result<ExperimentReport> {
    if n_max == 0 || n_max > design.len() {
        return Err(Error::Config(format!(
            "n_max must be in 1..={} for this design (got {n_max})",
            design.len()
        )));
    }
    let mask: Vec<bool> = (0..scn.class.len())
        .map(|m| scn.class.sup_dist(m, scn.fstar_index) > eps)
        .collect();
    let qid = format!("sup_complement(eps={eps})");
    let k = scn.class.len();
    let paths: Vec<Vec<Vec<Value>>> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<Vec<Value>>> {
            let mut r = rng::stream(seed, rep as u64);
            let mut st = PosteriorState::new(&scn.prior, scn.fstar_index)?;
            let mut rows = Vec::new();
            let mut ll = vec![0.0; k];
            for (i, &x) in design.points[..n_max].iter().enumerate() {
                let y = scn.sample(x, &mut r);
                for (m, v) in ll.iter_mut().enumerate() {
                    *v = scn.log_lik(m, x, y);
                }
                st.update_with(&ll)?;
                let n = i + 1;
                if n % every.max(1) == 0 || n == n_max {
                    rows.push(vec![
                        json!(rep),
                        json!(n),
                        json!(qid),
                        num(st.mass(&mask)),
                        num(st.log_denominator()),
                        json!(seed),
                    ]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(
        "inid",
        json!({
            "kind": scn.kind,
            "members": k,
            "n_max": n_max,
            "eps": eps,
            "replications": reps,
            "seed": seed,
        }),
        &["replication", "n", "query_id", "mass", "log_denominator", "seed"],
    );
    paths.into_iter().flatten().for_each(|r| report.push(r));
    let mi = 3;
    let finals: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r[1].as_u64() == Some(n_max as u64))
        .map(|r| r[mi].as_f64().unwrap_or(f64::NAN))
        .collect();
    report.summary = json!({
        "far_members": mask.iter().filter(|b| **b).count(),
        "mass_at_n_max_le_0.05": finals.iter().filter(|m| **m <= 0.05).count(),
        "max_mass_at_n_max": num(finals.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ald_scenario(levels: Vec<Vec<f64>>) -> InidScenario {
        build_inid_scenario(&InidConfig {
            kind: RegressionKind::Ald { tau: 0.5 },
            theta0: vec![0.3, 0.4],
            levels: Some(levels),
            bound: 6.0,
            residual: Density::normal(0.0, 1.0).unwrap(),
        })
        .unwrap()
    }

    #[test]
    fn sup_norm_examples() {
        let g = linspace(0.0, 1.0, 1001);
        let a = Poly::new(vec![0.0, 1.0]);
        let b = Poly::new(vec![0.0, 0.0, 1.0]);
        assert_eq!(sup_norm(&a, &a, &g), 0.0);
        assert!((sup_norm(&a, &b, &g) - 0.25).abs() < 1e-15);
        // (0.1, -0.1): 0.1 - 0.1 x peaks at x = 0.
        let c = Poly::new(vec![0.4, 0.2]);
        let d = Poly::new(vec![0.3, 0.3]);
        assert!((sup_norm(&c, &d, &g) - 0.1).abs() < 1e-6);
    }

    #[test]
    fn kappa_examples() {
        let alt = Design::alternating(0.2, 0.8, 100).unwrap();
        let s = kappa(&alt, 0.2, 0.1, 2, 100).unwrap();
        assert_eq!(s.fractions[99], 0.5);
        assert!(s.positive);
        let eq = Design::cyclic(101, 62, 2020).unwrap();
        // Lattice nodes 0.46..=0.55 lie within 0.05 of 0.503; the centre is
        // off the lattice so no node sits on the boundary.
        let s = kappa(&eq, 0.503, 0.05, 101, 2020).unwrap();
        assert!((s.final_fraction - 10.0 / 101.0).abs() < 1e-12, "{}", s.final_fraction);
        assert!(s.kappa_hat > 0.08);
        let avoid = Design::alternating(0.0, 1.0, 50).unwrap();
        let s = kappa(&avoid, 0.5, 0.1, 1, 50).unwrap();
        assert_eq!(s.kappa_hat, 0.0);
        assert!(!s.positive);
        assert!(kappa(&avoid, 0.5, 0.1, 0, 50).is_err());
    }

    #[test]
    fn cyclic_design_visits_every_node() {
        let d = Design::cyclic(101, 62, 101).unwrap();
        let mut v: Vec<u64> = d.points.iter().map(|x| (x * 100.0).round() as u64).collect();
        v.sort_unstable();
        assert_eq!(v, (0..=100).collect::<Vec<_>>());
        assert!(Design::cyclic(100, 10, 5).is_err());
    }

    #[test]
    fn csv_design_with_header() {
        let d = Design::from_csv("x\n0.1\n0.5\n0.9\n".as_bytes(), (0.0, 1.0)).unwrap();
        assert_eq!(d.points, vec![0.1, 0.5, 0.9]);
        assert!(Design::from_csv("x\n1.5\n".as_bytes(), (0.0, 1.0)).is_err());
    }

    #[test]
    fn quantile_bound_normal_oracle() {
        let z = Density::normal(0.0, 1.0).unwrap();
        let t = Poly::new(vec![0.3, 0.4]);
        let b = quantile_kl_bound(&z, &t, &t, &linspace(0.0, 1.0, 5), 0.2);
        // 0.1 (Phi(0.1) - 1/2) from the series of erf.
        let x: f64 = 0.1 / std::f64::consts::SQRT_2;
        let erf = 2.0 / std::f64::consts::PI.sqrt()
            * (0..20).fold(0.0, |s, k| {
                let k = k as i32;
                let fact: f64 = (1..=k).map(f64::from).product();
                s + (-1f64).powi(k) * x.powi(2 * k + 1) / (fact * f64::from(2 * k + 1))
            });
        let want = 0.1 * 0.5 * erf;
        for d in &b.delta_x {
            assert!((d - want).abs() < 1e-12, "{d} vs {want}");
        }
        assert!((want - 0.003_98).abs() < 1e-5);
    }

    #[test]
    fn decaying_box_respects_decay() {
        let c = FunctionClass::decaying_box(3, 3).unwrap();
        assert_eq!(c.len(), 81);
        assert!(c.has_decaying_coefficients());
        assert!(c.resolution > 0.0);
    }

    #[test]
    fn far_member_lemma() {
        let s = ald_scenario(vec![vec![-0.2, 0.3, 0.8], vec![-0.6, 0.4, 1.4], vec![-1.0, 0.0, 1.0]]);
        let design = Design::cyclic(101, 62, 500).unwrap();
        let far = s.far_members(&design, 500, 0.1);
        assert!(!far.is_empty());
        for f in &far {
            assert!(f.lemma_ok && f.delta_prime > 0.0, "{f:?}");
        }
    }

    #[test]
    fn checkers_cde_on_ald() {
        let s = ald_scenario(vec![vec![0.3], vec![0.4]]);
        let w = check_assumptions_cde(&s, 0.2, ProbeConfig { points: 6, tol: 1e-9 }).unwrap();
        assert!(w.iter().all(|w| w.verdict == Verdict::Holds), "{w:?}");
        assert!(w[1].certificate["ald_bound_slack"] <= 1e-9);
    }

    #[test]
    fn singleton_class_has_no_far_mass() {
        let s = ald_scenario(vec![vec![0.3], vec![0.4]]);
        let d = Design::cyclic(101, 62, 50).unwrap();
        let r = inid_run(&s, &d, 50, 0.1, 2, 1, 10).unwrap();
        assert!(r.rows.iter().all(|row| row[3].as_f64() == Some(0.0)));
    }

    #[test]
    fn runs_are_deterministic() {
        let s = ald_scenario(vec![vec![-0.2, 0.3, 0.8], vec![0.4]]);
        let d = Design::cyclic(101, 62, 200).unwrap();
        let a = inid_run(&s, &d, 200, 0.1, 3, 11, 50).unwrap();
        let b = inid_run(&s, &d, 200, 0.1, 3, 11, 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn theta0_off_quantile_rejected() {
        let cfg = InidConfig {
            kind: RegressionKind::Ald { tau: 0.5 },
            theta0: vec![0.3],
            levels: Some(vec![vec![0.3]]),
            bound: 1.0,
            residual: Density::normal(0.5, 1.0).unwrap(),
        };
        assert!(matches!(build_inid_scenario(&cfg), Err(Error::Config(_))));
    }
}
