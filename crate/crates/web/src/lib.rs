//! Browser bindings. Each export takes plain strings and numbers and
//! returns a JSON document for the page to plot.

use wasm_bindgen::prelude::*;

pub mod api {
    use misspec::catalog::catalog;
    use misspec::divergence::{alpha_affinity, g_alpha, kl_excess, weighted_l1};
    use misspec::family::FiniteFamily;
    use misspec::posterior::{run_trajectory, Geometry, RegionQuery, TrajectoryConfig};
    use misspec::projection::kl_minimizer;
    use misspec::scenarios::example2_simulate;
    use serde::Serialize;
    use serde_json::Value;

    const TOL: f64 = 1e-9;

    fn text(e: misspec::Error) -> String {
        e.to_string()
    }

    fn to_json<T: Serialize>(v: &T) -> String {
        serde_json::to_string(v).expect("serializable")
    }

    #[derive(Debug, Serialize)]
    pub struct AffinityCurve {
        pub alpha: Vec<f64>,
        pub h: Vec<f64>,
        pub g: Vec<f64>,
        pub kl_excess: f64,
        pub weighted_l1: f64,
    }

    /// `alpha -> E0 (f/f*)^alpha` and `(1 - h)/alpha` on `points` equispaced
    /// exponents in `(0, 1]`.
    pub fn affinity_curve(truth: &str, member: &str, fstar: &str, points: usize) -> Result<String, String> {
        let f0 = catalog(truth).map_err(text)?;
        let f = catalog(member).map_err(text)?;
        let fs = catalog(fstar).map_err(text)?;
        let points = points.clamp(2, 400);
        let alpha: Vec<f64> = (1..=points).map(|i| i as f64 / points as f64).collect();
        let h = alpha
            .iter()
            .map(|&a| alpha_affinity(&f0, &f, &fs, a, TOL).map(|d| d.value))
            .collect::<misspec::Result<Vec<_>>>()
            .map_err(text)?;
        let g = alpha
            .iter()
            .map(|&a| g_alpha(&f0, &f, &fs, a, TOL))
            .collect::<misspec::Result<Vec<_>>>()
            .map_err(text)?;
        Ok(to_json(&AffinityCurve {
            alpha,
            h,
            g,
            kl_excess: kl_excess(&f0, &f, &fs, TOL).map_err(text)?.value,
            weighted_l1: weighted_l1(&f0, &f, &fs, &fs, TOL).map_err(text)?.value,
        }))
    }

    #[derive(Debug, Serialize)]
    pub struct Example2Path {
        pub n: Vec<u64>,
        pub lower_bound: Vec<f64>,
        pub log1msqrt_mn: Vec<f64>,
        pub event: Vec<bool>,
    }

    /// One simulated sample path of the second counterexample: the posterior
    /// lower bound on the mass away from the projection, and the running
    /// `log(1 - sqrt M_n)` against the event threshold `-n`.
    pub fn example2_path(n_max: usize, seed: u64) -> Result<String, String> {
        let rep = example2_simulate(n_max, 1, seed).map_err(text)?;
        let col = |name: &str| rep.column(name).expect("column");
        let (ni, bi, mi, ei) = (col("n"), col("lower_bound"), col("log1msqrtMn"), col("event"));
        let f = |v: &Value| v.as_f64().unwrap_or(f64::NAN);
        Ok(to_json(&Example2Path {
            n: rep.rows.iter().map(|r| r[ni].as_u64().unwrap()).collect(),
            lower_bound: rep.rows.iter().map(|r| f(&r[bi])).collect(),
            log1msqrt_mn: rep.rows.iter().map(|r| f(&r[mi])).collect(),
            event: rep.rows.iter().map(|r| r[ei].as_bool().unwrap()).collect(),
        }))
    }

    #[derive(Debug, Serialize)]
    pub struct PosteriorPath {
        pub fstar: String,
        pub distances: Vec<f64>,
        pub n: Vec<u64>,
        pub mass: Vec<f64>,
        pub log_denominator: Vec<f64>,
    }

    /// Posterior mass of `{f : E0|f/f* - 1| >= eps}` along one sample from
    /// the truth. `members` holds one density spec per line.
    pub fn posterior_path(truth: &str, members: &str, eps: f64, n_max: usize, seed: u64) -> Result<String, String> {
        let f0 = catalog(truth).map_err(text)?;
        let ms = members
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(catalog)
            .collect::<misspec::Result<Vec<_>>>()
            .map_err(text)?;
        if !(eps > 0.0) {
            return Err(format!("eps must be positive (got {eps})"));
        }
        if n_max == 0 || n_max > 5000 {
            return Err(format!("n must be in 1..=5000 (got {n_max})"));
        }
        let fam = FiniteFamily::uniform(ms).map_err(text)?;
        let star = kl_minimizer(&f0, &fam, TOL).map_err(text)?.index;
        let fs = &fam.members[star];
        let geo = Geometry::from_metric(fam.len(), |m| Ok(weighted_l1(&f0, &fam.members[m], fs, fs, TOL)?.value))
            .map_err(text)?;
        let cfg = TrajectoryConfig {
            n_max,
            seed,
            reps: 1,
            every: 1,
        };
        let rep = run_trajectory(&f0, &fam, star, &geo, &[RegionQuery::BallComplement { eps }], &cfg, Value::Null)
            .map_err(text)?;
        let col = |name: &str| rep.column(name).expect("column");
        let (ni, mi, li) = (col("n"), col("mass"), col("log_denominator"));
        let f = |v: &Value| v.as_f64().unwrap_or(f64::NAN);
        Ok(to_json(&PosteriorPath {
            fstar: fs.label.clone(),
            distances: geo.dist.clone(),
            n: rep.rows.iter().map(|r| r[ni].as_u64().unwrap()).collect(),
            mass: rep.rows.iter().map(|r| f(&r[mi])).collect(),
            log_denominator: rep.rows.iter().map(|r| f(&r[li])).collect(),
        }))
    }
}

#[wasm_bindgen]
pub fn affinity_curve(truth: &str, member: &str, fstar: &str, points: usize) -> Result<String, JsError> {
    api::affinity_curve(truth, member, fstar, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn example2_path(n_max: usize, seed: u64) -> Result<String, JsError> {
    api::example2_path(n_max, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn posterior_path(truth: &str, members: &str, eps: f64, n_max: usize, seed: u64) -> Result<String, JsError> {
    api::posterior_path(truth, members, eps, n_max, seed).map_err(|e| JsError::new(&e))
}
