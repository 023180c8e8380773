//! Run configuration: a TOML file with a `command` key and one table of
//! parameters for that command, overridable from the command line.

use std::path::{Path, PathBuf};

use clap::Args;
use misspec::inid::DesignSpec;
use misspec::report::Format;
use misspec::scenarios::TestFunction;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const COMMANDS: [&str; 7] = [
    "divergence",
    "project",
    "trajectory",
    "check",
    "counterexample",
    "inid-run",
    "mixture",
];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: String,
    pub seed: Option<i64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub divergence: Option<toml::Table>,
    pub project: Option<toml::Table>,
    pub trajectory: Option<toml::Table>,
    pub check: Option<toml::Table>,
    pub counterexample: Option<toml::Table>,
    #[serde(rename = "inid-run")]
    pub inid_run: Option<toml::Table>,
    pub mixture: Option<toml::Table>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg: FileConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        if !COMMANDS.contains(&cfg.command.as_str()) {
            return Err(CliError::Config(format!(
                "command: unknown command {:?} (expected one of {})",
                cfg.command,
                COMMANDS.join(", ")
            )));
        }
        for (name, table) in cfg.tables() {
            if table.is_some() && name != cfg.command {
                return Err(CliError::Config(format!(
                    "[{name}]: table does not apply to command {:?}",
                    cfg.command
                )));
            }
        }
        Ok(cfg)
    }

    fn tables(&self) -> [(&'static str, &Option<toml::Table>); 7] {
        [
            ("divergence", &self.divergence),
            ("project", &self.project),
            ("trajectory", &self.trajectory),
            ("check", &self.check),
            ("counterexample", &self.counterexample),
            ("inid-run", &self.inid_run),
            ("mixture", &self.mixture),
        ]
    }

    /// Parameters for the configured command, or defaults if the table is absent.
    pub fn params<P: DeserializeOwned + Default>(&self) -> Result<P, CliError> {
        let name = self.command.as_str();
        match self.tables().into_iter().find(|(n, _)| *n == name).and_then(|(_, t)| t.clone()) {
            None => Ok(P::default()),
            Some(t) => P::deserialize(toml::Value::Table(t))
                .map_err(|e| CliError::Config(format!("[{name}]: {}", e.message()))),
        }
    }
}

/// Overlays every non-null field of `over` onto `base`.
pub fn overlay<P: Serialize + DeserializeOwned>(base: P, over: &P) -> P {
    let mut b = serde_json::to_value(base).expect("params serialize");
    if let (Value::Object(bm), Value::Object(om)) = (&mut b, serde_json::to_value(over).expect("params serialize")) {
        for (k, v) in om {
            if !v.is_null() {
                bm.insert(k, v);
            }
        }
    }
    serde_json::from_value(b).expect("params round-trip")
}

pub trait Params: Serialize + DeserializeOwned + Default + Clone {
    /// Draws random samples, so a seed is required.
    const SAMPLING: bool;
    /// Fills defaults and checks ranges. Diagnostics name the field.
    fn resolve(self) -> Result<Self, CliError>;
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn need<T>(field: &str, v: Option<T>) -> Result<T, CliError> {
    v.ok_or_else(|| bad(field, "required"))
}

fn positive(field: &str, v: Option<i64>, default: i64) -> Result<Option<i64>, CliError> {
    let v = v.unwrap_or(default);
    if v <= 0 {
        return Err(bad(field, format!("must be a positive integer (got {v})")));
    }
    Ok(Some(v))
}

fn positive_f(field: &str, v: Option<f64>, default: f64) -> Result<Option<f64>, CliError> {
    let v = v.unwrap_or(default);
    if !(v > 0.0 && v.is_finite()) {
        return Err(bad(field, format!("must be positive and finite (got {v})")));
    }
    Ok(Some(v))
}

fn positive_all(field: &str, v: Option<Vec<f64>>, default: &[f64]) -> Result<Option<Vec<f64>>, CliError> {
    let v = v.unwrap_or_else(|| default.to_vec());
    if v.is_empty() {
        return Err(bad(field, "must not be empty"));
    }
    if let Some(x) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(bad(field, format!("entries must be positive and finite (got {x})")));
    }
    Ok(Some(v))
}

fn density(field: &str, spec: &str) -> Result<(), CliError> {
    misspec::catalog::catalog(spec).map(|_| ()).map_err(|e| bad(field, e))
}

fn members(field: &str, v: Option<Vec<String>>) -> Result<Option<Vec<String>>, CliError> {
    let v = need(field, v)?;
    if v.is_empty() {
        return Err(bad(field, "must list at least one density"));
    }
    for s in &v {
        density(field, s)?;
    }
    Ok(Some(v))
}

fn prior(v: &Option<Vec<f64>>, k: usize) -> Result<(), CliError> {
    if let Some(p) = v {
        if p.len() != k {
            return Err(bad("prior", format!("{} weights for {k} members", p.len())));
        }
        if p.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(bad("prior", "weights must be finite and nonnegative"));
        }
    }
    Ok(())
}

const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct DivergenceParams {
    /// Truth density, e.g. `unif(0,1)`.
    #[arg(long)]
    pub truth: Option<String>,
    /// Model density f.
    #[arg(long)]
    pub member: Option<String>,
    /// Reference density for the excess and affinity; defaults to `member`.
    #[arg(long)]
    pub fstar: Option<String>,
    /// Affinity exponents.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Params for DivergenceParams {
    const SAMPLING: bool = false;
    fn resolve(self) -> Result<Self, CliError> {
        let truth = need("truth", self.truth)?;
        density("truth", &truth)?;
        let member = need("member", self.member)?;
        density("member", &member)?;
        let fstar = self.fstar.unwrap_or_else(|| member.clone());
        density("fstar", &fstar)?;
        let alpha = self.alpha.unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]);
        if let Some(a) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(bad("alpha", format!("must lie in [0, 1] (got {a})")));
        }
        Ok(DivergenceParams {
            truth: Some(truth),
            member: Some(member),
            fstar: Some(fstar),
            alpha: Some(alpha),
            tol: positive_f("tol", self.tol, TOL)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ProjectParams {
    #[arg(long)]
    pub truth: Option<String>,
    /// Family members; repeat the flag or separate with `;`.
    #[arg(long = "member", value_delimiter = ';')]
    pub members: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub prior: Option<Vec<f64>>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Params for ProjectParams {
    const SAMPLING: bool = false;
    fn resolve(self) -> Result<Self, CliError> {
        let truth = need("truth", self.truth)?;
        density("truth", &truth)?;
        let members = members("members", self.members)?;
        prior(&self.prior, members.as_ref().map_or(0, Vec::len))?;
        Ok(ProjectParams {
            truth: Some(truth),
            members,
            prior: self.prior,
            tol: positive_f("tol", self.tol, TOL)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `E0 |f/f* - 1|`
    WeightedL1,
    /// `int |f - f*| dmu`
    L1,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryParams {
    #[arg(long)]
    pub truth: Option<String>,
    #[arg(long = "member", value_delimiter = ';')]
    pub members: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub prior: Option<Vec<f64>>,
    /// Index of f*; defaults to the KL projection.
    #[arg(long)]
    pub fstar: Option<i64>,
    #[arg(long, value_enum)]
    pub metric: Option<Metric>,
    /// Radii of the tracked ball complements.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub n_max: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub reps: Option<i64>,
    /// Record every this many steps.
    #[arg(long, allow_negative_numbers = true)]
    pub every: Option<i64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Params for TrajectoryParams {
    const SAMPLING: bool = true;
    fn resolve(self) -> Result<Self, CliError> {
        let truth = need("truth", self.truth)?;
        density("truth", &truth)?;
        let members = members("members", self.members)?;
        let k = members.as_ref().map_or(0, Vec::len);
        prior(&self.prior, k)?;
        if let Some(i) = self.fstar {
            if i < 0 || i as usize >= k {
                return Err(bad("fstar", format!("index {i} outside 0..{k}")));
            }
        }
        Ok(TrajectoryParams {
            truth: Some(truth),
            members,
            prior: self.prior,
            fstar: self.fstar,
            metric: Some(self.metric.unwrap_or(Metric::WeightedL1)),
            eps: positive_all("eps", self.eps, &[0.1])?,
            n_max: positive("n_max", self.n_max, 200)?,
            reps: positive("reps", self.reps, 1)?,
            every: positive("every", self.every, 1)?,
            tol: positive_f("tol", self.tol, TOL)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    /// `1` (prior mass), `2c` (affinity separation) or `2c-sufficient`.
    #[arg(long)]
    pub assumption: Option<String>,
    /// `unif-grid`, `example1` or `custom` (uses truth and members).
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub truth: Option<String>,
    #[arg(long = "member", value_delimiter = ';')]
    pub members: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub prior: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Exponent for the sufficient-condition check.
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

pub const SCENARIOS: [&str; 3] = ["unif-grid", "example1", "custom"];
pub const ASSUMPTIONS: [&str; 3] = ["1", "2c", "2c-sufficient"];

impl Params for CheckParams {
    const SAMPLING: bool = false;
    fn resolve(self) -> Result<Self, CliError> {
        let assumption = need("assumption", self.assumption)?;
        if !ASSUMPTIONS.contains(&assumption.as_str()) {
            return Err(bad("assumption", format!("unknown assumption {assumption:?} (expected {})", ASSUMPTIONS.join(", "))));
        }
        let scenario = self.scenario.unwrap_or_else(|| "custom".into());
        if !SCENARIOS.contains(&scenario.as_str()) {
            return Err(bad("scenario", format!("unknown scenario {scenario:?} (expected {})", SCENARIOS.join(", "))));
        }
        let (truth, members) = if scenario == "custom" {
            let t = need("truth", self.truth)?;
            density("truth", &t)?;
            let m = members("members", self.members)?;
            prior(&self.prior, m.as_ref().map_or(0, Vec::len))?;
            (Some(t), m)
        } else {
            if self.truth.is_some() || self.members.is_some() || self.prior.is_some() {
                return Err(bad("scenario", format!("{scenario:?} fixes truth, members and prior")));
            }
            (None, None)
        };
        let alpha0 = self.alpha0.unwrap_or(0.5);
        if !(alpha0 > 0.0 && alpha0 <= 1.0) {
            return Err(bad("alpha0", format!("must lie in (0, 1] (got {alpha0})")));
        }
        Ok(CheckParams {
            assumption: Some(assumption),
            scenario: Some(scenario),
            truth,
            members,
            prior: self.prior,
            eps: positive_all("eps", self.eps, &[0.05])?,
            alpha0: Some(alpha0),
            tol: positive_f("tol", self.tol, TOL)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    /// `example1` or `example2`.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub n_max: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub reps: Option<i64>,
    /// Largest k in `b_k = 1/2 - 1/k` for example1.
    #[arg(long, allow_negative_numbers = true)]
    pub k_max: Option<i64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Params for CounterexampleParams {
    // example1 is deterministic; the seed check is done per id.
    const SAMPLING: bool = false;
    fn resolve(self) -> Result<Self, CliError> {
        let id = need("id", self.id)?;
        match id.as_str() {
            "example1" => {
                let k_max = positive("k_max", self.k_max, 50)?;
                if k_max < Some(3) {
                    return Err(bad("k_max", "must be at least 3"));
                }
                if self.n_max.is_some() || self.reps.is_some() {
                    return Err(bad("id", "example1 takes no n_max or reps"));
                }
                Ok(CounterexampleParams {
                    id: Some(id),
                    k_max,
                    tol: positive_f("tol", self.tol, TOL)?,
                    ..Default::default()
                })
            }
            "example2" => {
                if self.k_max.is_some() || self.tol.is_some() {
                    return Err(bad("id", "example2 takes no k_max or tol"));
                }
                let n_max = positive("n_max", self.n_max, 40)?;
                if n_max > Some(10_000) {
                    return Err(bad("n_max", "at most 10000"));
                }
                Ok(CounterexampleParams {
                    id: Some(id),
                    n_max,
                    reps: positive("reps", self.reps, 100)?,
                    ..Default::default()
                })
            }
            other => Err(bad("id", format!("unknown counterexample {other:?} (expected example1, example2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Normal,
    Ald,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct InidParams {
    /// Working likelihood.
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Quantile level for the `ald` likelihood.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Polynomial coefficients of the true regression function.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta0: Option<Vec<f64>>,
    /// Coefficient levels (file only); the class is their product.
    /// Defaults to five levels for each of three coefficients around `theta0 = (0.3, 0.4, 0)`.
    #[arg(skip)]
    pub levels: Option<Vec<Vec<f64>>>,
    /// Sup bound on class members over [0, 1].
    #[arg(long)]
    pub bound: Option<f64>,
    /// Residual law, e.g. `normal(0,1)`.
    #[arg(long)]
    pub residual: Option<String>,
    /// Covariate sequence (file only); defaults to the cyclic lattice m = 101, stride 62.
    #[arg(skip)]
    pub design: Option<DesignSpec>,
    #[arg(long, allow_negative_numbers = true)]
    pub n_max: Option<i64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub reps: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub every: Option<i64>,
    /// Also certify the regularity, design and decay conditions.
    #[arg(long)]
    pub check: Option<bool>,
}

impl Params for InidParams {
    const SAMPLING: bool = true;
    fn resolve(self) -> Result<Self, CliError> {
        let kind = self.kind.unwrap_or(Kind::Ald);
        let tau = match kind {
            Kind::Ald => {
                let t = self.tau.unwrap_or(0.5);
                if !(t > 0.0 && t < 1.0) {
                    return Err(bad("tau", format!("must lie in (0, 1) (got {t})")));
                }
                Some(t)
            }
            Kind::Normal => {
                if self.tau.is_some() {
                    return Err(bad("tau", "only applies to kind = \"ald\""));
                }
                None
            }
        };
        let theta0 = self.theta0.unwrap_or_else(|| vec![0.3, 0.4, 0.0]);
        if theta0.is_empty() {
            return Err(bad("theta0", "must not be empty"));
        }
        let residual = self.residual.unwrap_or_else(|| "normal(0,1)".into());
        density("residual", &residual)?;
        let levels = self.levels.unwrap_or_else(|| {
            vec![
                vec![-0.7, -0.2, 0.3, 0.8, 1.3],
                vec![-1.6, -0.6, 0.4, 1.4, 2.4],
                vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            ]
        });
        if levels.is_empty() || levels.iter().any(Vec::is_empty) {
            return Err(bad("levels", "every coefficient needs at least one level"));
        }
        Ok(InidParams {
            kind: Some(kind),
            tau,
            theta0: Some(theta0),
            levels: Some(levels),
            bound: positive_f("bound", self.bound, 6.0)?,
            residual: Some(residual),
            design: Some(self.design.unwrap_or(DesignSpec::Cyclic { m: 101, stride: 62 })),
            n_max: positive("n_max", self.n_max, 2000)?,
            eps: positive_f("eps", self.eps, 0.1)?,
            reps: positive("reps", self.reps, 20)?,
            every: positive("every", self.every, 100)?,
            check: Some(self.check.unwrap_or(false)),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct MixtureParams {
    #[arg(long)]
    pub truth: Option<String>,
    /// Kernel standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Kernel locations.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub z_grid: Option<Vec<f64>>,
    /// Mixing weights are multiples of 1/resolution.
    #[arg(long, allow_negative_numbers = true)]
    pub resolution: Option<i64>,
    /// Test functions for the weak neighborhood (file only).
    #[arg(skip)]
    pub tests: Option<Vec<TestFunction>>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub n_max: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub reps: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub every: Option<i64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Params for MixtureParams {
    const SAMPLING: bool = true;
    fn resolve(self) -> Result<Self, CliError> {
        let truth = self.truth.unwrap_or_else(|| "student_t(5,0,1)".into());
        density("truth", &truth)?;
        let z_grid = self.z_grid.unwrap_or_else(|| vec![-1.0, 0.0, 1.0]);
        if z_grid.is_empty() {
            return Err(bad("z_grid", "must not be empty"));
        }
        let tests = self.tests.unwrap_or_else(|| {
            vec![
                TestFunction::Cos { freq: 1.0 },
                TestFunction::Logistic { center: 0.0 },
            ]
        });
        if tests.is_empty() {
            return Err(bad("tests", "must not be empty"));
        }
        Ok(MixtureParams {
            truth: Some(truth),
            sigma: positive_f("sigma", self.sigma, 1.0)?,
            z_grid: Some(z_grid),
            resolution: positive("resolution", self.resolution, 4)?,
            tests: Some(tests),
            eps: positive_f("eps", self.eps, 0.05)?,
            n_max: positive("n_max", self.n_max, 500)?,
            reps: positive("reps", self.reps, 1)?,
            every: positive("every", self.every, 10)?,
            tol: positive_f("tol", self.tol, TOL)?,
        })
    }
}

/// Global settings after merging file and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Global {
    pub command: String,
    pub seed: Option<u64>,
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl Global {
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            bad(
                "seed",
                format!("required for sampling command {:?} (pass --seed N or set seed in the config)", self.command),
            )
        })
    }
}
