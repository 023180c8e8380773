//! Location mixtures `p_nu(y) = sum_z nu(z) f(y | z)` of normal kernels,
//! with the mixing weights restricted to a simplex grid.

use serde::{Deserialize, Serialize};

use crate::checkers::hull::simplex_grid;
use crate::density::Density;
use crate::divergence::{l1, weighted_l1};
use crate::error::{Error, Result};
use crate::family::FiniteFamily;
use crate::posterior::{Geometry, RegionQuery};
use crate::projection::{kl_minimizer, Projection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    /// Kernel scale: `f(y | z)` is `N(z, sigma^2)`.
    pub sigma: f64,
    pub z_grid: Vec<f64>,
    /// Weights are multiples of `1 / resolution`.
    pub resolution: usize,
}

/// Bounded test function for weak neighborhoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { value: f64 },
    Indicator { lo: f64, hi: f64 },
    Cos { freq: f64 },
    Sin { freq: f64 },
    /// `1 / (1 + e^{-(y - center)})`
    Logistic { center: f64 },
}

impl TestFunction {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Indicator { lo, hi } => f64::from(u8::from(y >= lo && y < hi)),
            TestFunction::Cos { freq } => (freq * y).cos(),
            TestFunction::Sin { freq } => (freq * y).sin(),
            TestFunction::Logistic { center } => 1.0 / (1.0 + (center - y).exp()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixtureScenario {
    pub family: FiniteFamily,
    pub projection: Projection,
    /// `d(f, f*) = E0 |f/f* - 1|` plus one weak functional per test function.
    pub geometry: Geometry,
    pub queries: Vec<RegionQuery>,
    /// Per test function: the function is constant (it only constrains the
    /// total mass `E0 f/f*`), or no member leaves its neighborhood.
    pub degenerate: Vec<bool>,
    /// Largest total-variation distance between kernels at neighboring
    /// grid nodes.
    pub max_neighbor_tv: f64,
}

fn grid_mixtures(spec: &MixtureSpec) -> Result<(Vec<Density>, Vec<Vec<f64>>)> {
    if spec.z_grid.is_empty() || spec.resolution == 0 {
        return Err(Error::Config("mixture grid is empty".into()));
    }
    if !(spec.sigma > 0.0) {
        return Err(Error::Domain {
            name: "sigma",
            value: spec.sigma,
            domain: "(0, inf)",
        });
    }
    let mut members = Vec::new();
    let mut params = Vec::new();
    for w in simplex_grid(spec.z_grid.len(), spec.resolution) {
        let (ws, cs): (Vec<f64>, Vec<Density>) = w
            .iter()
            .zip(&spec.z_grid)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, z)| Ok((*w, Density::normal(*z, spec.sigma)?)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let s: f64 = ws.iter().sum();
        let ws = ws.iter().map(|w| w / s).collect();
        members.push(Density::mixture(ws, cs)?);
        params.push(w);
    }
    Ok((members, params))
}

/// Builds the grid family, its KL projection, and the weak-complement query
/// with tolerance `eps` for each test function.
pub fn mixture_scenario(
    spec: &MixtureSpec,
    f0: &Density,
    tests: &[TestFunction],
    eps: f64,
    tol: f64,
) -> Result<MixtureScenario> {
    let (members, params) = grid_mixtures(spec)?;
    let family = FiniteFamily::uniform(members)?.with_params(params)?;
    let projection = kl_minimizer(f0, &family, tol)?;
    let fstar = &family.members[projection.index];
    let geometry = Geometry::from_metric(family.len(), |m| {
        Ok(weighted_l1(f0, &family.members[m], fstar, fstar, tol)?.value)
    })?;
    let phis: Vec<_> = tests
        .iter()
        .map(|t| {
            let t = t.clone();
            move |y: f64| t.eval(y)
        })
        .collect();
    let geometry = geometry.with_weak(f0, &family, fstar, &phis, tol)?;
    let degenerate = geometry
        .weak
        .iter()
        .zip(tests)
        .map(|(w, t)| {
            let c = w[projection.index];
            matches!(t, TestFunction::Constant { .. }) || w.iter().all(|v| (v - c).abs() < eps)
        })
        .collect();
    let queries = vec![
        RegionQuery::WeakComplement {
            eps: vec![eps; tests.len()],
        },
        RegionQuery::BallComplement { eps },
    ];
    let mut zs = spec.z_grid.clone();
    zs.sort_by(f64::total_cmp);
    let max_neighbor_tv = zs
        .windows(2)
        .map(|p| {
            let a = Density::normal(p[0], spec.sigma)?;
            let b = Density::normal(p[1], spec.sigma)?;
            Ok(0.5 * l1(&a, &b, tol)?.value)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(MixtureScenario {
        family,
        projection,
        geometry,
        queries,
        degenerate,
        max_neighbor_tv,
    })
}
