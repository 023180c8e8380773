use std::fmt::Write as _;

use misspec::catalog::catalog;
use misspec::checkers::{check_assumption1, check_assumption2c, check_sufficient_2c, AssumptionWitness, Verdict};
use misspec::divergence::{alpha_affinity, g_alpha, kl, kl_excess, l1, weighted_l1, DivergenceEstimate};
use misspec::inid::{build_inid_scenario, check_assumptions_cde, inid_run, Design, InidConfig, ProbeConfig};
use misspec::posterior::{run_trajectory, Geometry, RegionQuery, TrajectoryConfig};
use misspec::projection::kl_minimizer;
use misspec::report::{num, ExperimentReport};
use misspec::scenarios::{example1_family, example1_report, example2_simulate, mixture_scenario, MixtureSpec, RegressionKind};
use misspec::family::FiniteFamily;
use misspec::Density;
use serde_json::{json, Value};

use crate::config::*;
use crate::error::CliError;

pub struct Outcome {
    pub report: ExperimentReport,
    /// Human-readable summary for standard output.
    pub table: String,
    /// Some checker returned a `Fails` verdict.
    pub failed: bool,
}

fn family(members: &[String], prior: &Option<Vec<f64>>) -> Result<FiniteFamily, CliError> {
    let ms = members.iter().map(|s| catalog(s)).collect::<misspec::Result<Vec<_>>>()?;
    Ok(match prior {
        Some(p) => FiniteFamily::weighted(ms, p)?,
        None => FiniteFamily::uniform(ms)?,
    })
}

fn n(v: Option<i64>) -> usize {
    v.expect("resolved") as usize
}

pub fn divergence(p: &DivergenceParams) -> Result<Outcome, CliError> {
    let tol = p.tol.unwrap();
    let f0 = catalog(p.truth.as_deref().unwrap())?;
    let f = catalog(p.member.as_deref().unwrap())?;
    let fs = catalog(p.fstar.as_deref().unwrap())?;
    let mut rep = ExperimentReport::new("divergence", Value::Null, &["quantity", "alpha", "value", "err", "method"]);
    let mut push = |q: &str, a: Option<f64>, d: DivergenceEstimate| {
        rep.push(vec![
            json!(q),
            a.map_or(Value::Null, num),
            num(d.value),
            num(d.err),
            serde_json::to_value(d.method).unwrap(),
        ]);
    };
    push("kl_truth_member", None, kl(&f0, &f, tol)?);
    push("kl_truth_fstar", None, kl(&f0, &fs, tol)?);
    push("kl_excess", None, kl_excess(&f0, &f, &fs, tol)?);
    push("weighted_l1", None, weighted_l1(&f0, &f, &fs, &fs, tol)?);
    push("l1", None, l1(&f, &fs, tol)?);
    for &a in p.alpha.as_ref().unwrap() {
        push("affinity", Some(a), alpha_affinity(&f0, &f, &fs, a, tol)?);
    }
    for &a in p.alpha.as_ref().unwrap() {
        let g = g_alpha(&f0, &f, &fs, a, tol)?;
        rep.push(vec![json!("g_alpha"), num(a), num(g), Value::Null, json!("derived")]);
    }
    let mut table = String::new();
    writeln!(table, "{:<16} {:>6} {:>14}", "quantity", "alpha", "value").unwrap();
    for r in &rep.rows {
        let a = r[1].as_f64().map_or(String::new(), |a| a.to_string());
        writeln!(table, "{:<16} {:>6} {:>14}", r[0].as_str().unwrap(), a, cell(&r[2])).unwrap();
    }
    Ok(Outcome { report: rep, table, failed: false })
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(x) => format!("{:.6}", x.as_f64().unwrap()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn project(p: &ProjectParams) -> Result<Outcome, CliError> {
    let f0 = catalog(p.truth.as_deref().unwrap())?;
    let fam = family(p.members.as_ref().unwrap(), &p.prior)?;
    let pr = kl_minimizer(&f0, &fam, p.tol.unwrap())?;
    let mut rep = ExperimentReport::new("project", Value::Null, &["member", "label", "prior", "kl", "projection"]);
    for (i, (m, k)) in fam.members.iter().zip(&pr.kls).enumerate() {
        rep.push(vec![json!(i), json!(m.label), num(fam.prior[i]), num(*k), json!(i == pr.index)]);
    }
    rep.summary = json!({
        "index": pr.index,
        "kl_at_min": num(pr.kl_at_min),
        "runner_up_gap": num(pr.runner_up_gap),
        "tie": pr.tie,
    });
    let mut table = String::new();
    writeln!(table, "projection {} ({})", pr.index, fam.members[pr.index].label).unwrap();
    writeln!(table, "kl {:.6}", pr.kl_at_min).unwrap();
    writeln!(table, "runner-up gap {:.3e}{}", pr.runner_up_gap, if pr.tie { " (tie)" } else { "" }).unwrap();
    Ok(Outcome { report: rep, table, failed: false })
}

fn summarize_masses(rep: &ExperimentReport) -> String {
    // Mean mass per query at the last recorded step.
    let (ni, qi, mi) = (rep.column("n").unwrap(), rep.column("query_id").unwrap(), rep.column("mass").unwrap());
    let last = rep.rows.iter().filter_map(|r| r[ni].as_u64()).max().unwrap_or(0);
    let mut acc: Vec<(String, f64, usize)> = Vec::new();
    for r in rep.rows.iter().filter(|r| r[ni].as_u64() == Some(last)) {
        let Some(m) = r[mi].as_f64() else { continue };
        let q = r[qi].as_str().unwrap_or("").to_string();
        match acc.iter_mut().find(|a| a.0 == q) {
            Some(a) => {
                a.1 += m;
                a.2 += 1;
            }
            None => acc.push((q, m, 1)),
        }
    }
    let mut t = String::new();
    writeln!(t, "n = {last}").unwrap();
    for (q, s, c) in acc {
        writeln!(t, "{q:<40} mean mass {:.4}", s / c as f64).unwrap();
    }
    t
}

pub fn trajectory(p: &TrajectoryParams, seed: u64) -> Result<Outcome, CliError> {
    let tol = p.tol.unwrap();
    let f0 = catalog(p.truth.as_deref().unwrap())?;
    let fam = family(p.members.as_ref().unwrap(), &p.prior)?;
    let star = match p.fstar {
        Some(i) => i as usize,
        None => kl_minimizer(&f0, &fam, tol)?.index,
    };
    let fs = &fam.members[star];
    let geo = Geometry::from_metric(fam.len(), |m| {
        let f = &fam.members[m];
        Ok(match p.metric.unwrap() {
            Metric::WeightedL1 => weighted_l1(&f0, f, fs, fs, tol)?.value,
            Metric::L1 => l1(f, fs, tol)?.value,
        })
    })?;
    let queries: Vec<RegionQuery> = p.eps.as_ref().unwrap().iter().map(|&eps| RegionQuery::BallComplement { eps }).collect();
    let cfg = TrajectoryConfig {
        n_max: n(p.n_max),
        seed,
        reps: n(p.reps),
        every: n(p.every),
    };
    let rep = run_trajectory(&f0, &fam, star, &geo, &queries, &cfg, Value::Null)?;
    let table = format!("fstar {star} ({})\n{}", fs.label, summarize_masses(&rep));
    Ok(Outcome { report: rep, table, failed: false })
}

fn unif_grid() -> Result<(Density, FiniteFamily), CliError> {
    let members = (10..=20)
        .map(|i| Density::uniform(0.0, i as f64 / 10.0))
        .collect::<misspec::Result<Vec<_>>>()?;
    Ok((Density::uniform(0.0, 1.0)?, FiniteFamily::uniform(members)?))
}

fn witness_table(ws: &[AssumptionWitness]) -> String {
    let mut t = String::new();
    for w in ws {
        write!(t, "{:<28} {:<13}", w.assumption, format!("{:?}", w.verdict).to_lowercase()).unwrap();
        if let Some(e) = w.epsilon {
            write!(t, " eps {e}").unwrap();
        }
        for (k, v) in &w.certificate {
            write!(t, " {k} {v:.4}").unwrap();
        }
        writeln!(t).unwrap();
    }
    t
}

fn witness_report(name: &str, ws: &[AssumptionWitness]) -> ExperimentReport {
    let mut rep = ExperimentReport::new(
        name,
        Value::Null,
        &["assumption", "verdict", "epsilon", "delta", "alpha0", "witness", "certificate"],
    );
    for w in ws {
        let opt = |x: Option<f64>| x.map_or(Value::Null, num);
        let cert: serde_json::Map<String, Value> = w.certificate.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
        rep.push(vec![
            json!(w.assumption),
            serde_json::to_value(w.verdict).unwrap(),
            opt(w.epsilon),
            opt(w.delta),
            opt(w.alpha0),
            w.witness.map_or(Value::Null, |i| json!(i)),
            json!(Value::Object(cert).to_string()),
        ]);
    }
    rep
}

pub fn check(p: &CheckParams) -> Result<Outcome, CliError> {
    let tol = p.tol.unwrap();
    let (f0, fam) = match p.scenario.as_deref().unwrap() {
        "unif-grid" => unif_grid()?,
        "example1" => {
            let (f0, fam, _) = example1_family(50)?;
            (f0, fam)
        }
        _ => (catalog(p.truth.as_deref().unwrap())?, family(p.members.as_ref().unwrap(), &p.prior)?),
    };
    let star = kl_minimizer(&f0, &fam, tol)?.index;
    let eps = p.eps.as_ref().unwrap();
    let ws = match p.assumption.as_deref().unwrap() {
        "1" => check_assumption1(&f0, &fam, star, eps, tol)?,
        "2c" => {
            let fs = &fam.members[star];
            let dist = fam
                .members
                .iter()
                .map(|f| Ok(weighted_l1(&f0, f, fs, fs, tol)?.value))
                .collect::<Result<Vec<_>, CliError>>()?;
            eps.iter()
                .map(|&e| check_assumption2c(&f0, &fam, star, &dist, e, tol))
                .collect::<misspec::Result<_>>()?
        }
        _ => vec![check_sufficient_2c(&f0, &fam, star, p.alpha0.unwrap(), tol)?],
    };
    let failed = ws.iter().any(|w| w.verdict == Verdict::Fails);
    Ok(Outcome {
        table: witness_table(&ws),
        report: witness_report("check", &ws),
        failed,
    })
}

pub fn counterexample(p: &CounterexampleParams, g: &Global) -> Result<Outcome, CliError> {
    if p.id.as_deref() == Some("example1") {
        let k = n(p.k_max) as u32;
        let r = example1_report(&misspec::scenarios::example1::default_b(k), p.tol.unwrap())?;
        let mut rep = ExperimentReport::new("example1", Value::Null, &["b", "kl", "kl_closed", "kl_excess", "l1_mu", "l1_mu0"]);
        for row in &r.rows {
            rep.push(vec![num(row.b), num(row.kl), num(row.kl_closed), num(row.kl_excess), num(row.l1_mu), num(row.l1_mu0)]);
        }
        rep.summary = json!({"kl_decreasing": r.kl_decreasing, "l1_above_quarter": r.l1_above_quarter});
        let last = r.rows.last().unwrap();
        let table = format!(
            "members {}\nlast b {:.6} kl_excess {:.3e} l1 {:.6}\nkl decreasing {}\nl1 above 1/4 {}\n",
            r.rows.len(),
            last.b,
            last.kl_excess,
            last.l1_mu,
            r.kl_decreasing,
            r.l1_above_quarter
        );
        return Ok(Outcome { report: rep, table, failed: false });
    }
    let rep = example2_simulate(n(p.n_max), n(p.reps), g.require_seed()?)?;
    let s = &rep.summary;
    let table = format!(
        "replications {}\nbound at n_max >= 0.99: {}\nevent holds for all n >= 10: {}\nnever settled: {}\nmedian final bound {}\n",
        s["replications"], s["bound_at_n_max_ge_0.99"], s["event_holds_for_all_n_from_10"], s["never_settled"], s["bound_at_n_max_quantiles"]["median"]
    );
    Ok(Outcome { report: rep, table, failed: false })
}

pub fn inid(p: &InidParams, seed: u64) -> Result<Outcome, CliError> {
    let kind = match p.kind.unwrap() {
        Kind::Normal => RegressionKind::Normal,
        Kind::Ald => RegressionKind::Ald { tau: p.tau.unwrap() },
    };
    let cfg = InidConfig {
        kind,
        theta0: p.theta0.clone().unwrap(),
        levels: p.levels.clone(),
        bound: p.bound.unwrap(),
        residual: catalog(p.residual.as_deref().unwrap())?,
    };
    let scn = build_inid_scenario(&cfg)?;
    let n_max = n(p.n_max);
    let design = Design::from_spec(p.design.as_ref().unwrap(), n_max)?;
    let eps = p.eps.unwrap();
    let mut rep = inid_run(&scn, &design, n_max, eps, n(p.reps), seed, n(p.every))?;
    let mut table = format!(
        "members {}\nfstar {}\nfar members {}\nmass at n_max <= 0.05: {} of {}\nmax mass at n_max {}\n",
        scn.class.len(),
        scn.fstar_index,
        rep.summary["far_members"],
        rep.summary["mass_at_n_max_le_0.05"],
        p.reps.unwrap(),
        rep.summary["max_mass_at_n_max"],
    );
    let mut failed = false;
    if p.check == Some(true) {
        let ws = check_assumptions_cde(&scn, eps, ProbeConfig::default())?;
        failed = ws.iter().any(|w| w.verdict == Verdict::Fails);
        table.push_str(&witness_table(&ws));
        if let Value::Object(m) = &mut rep.summary {
            m.insert("assumptions".into(), serde_json::to_value(&ws).unwrap());
        }
    }
    Ok(Outcome { report: rep, table, failed })
}

pub fn mixture(p: &MixtureParams, seed: u64) -> Result<Outcome, CliError> {
    let f0 = catalog(p.truth.as_deref().unwrap())?;
    let spec = MixtureSpec {
        sigma: p.sigma.unwrap(),
        z_grid: p.z_grid.clone().unwrap(),
        resolution: n(p.resolution),
    };
    let tests = p.tests.clone().unwrap();
    let scn = mixture_scenario(&spec, &f0, &tests, p.eps.unwrap(), p.tol.unwrap())?;
    let cfg = TrajectoryConfig {
        n_max: n(p.n_max),
        seed,
        reps: n(p.reps),
        every: n(p.every),
    };
    let star = scn.projection.index;
    let mut rep = run_trajectory(&f0, &scn.family, star, &scn.geometry, &scn.queries, &cfg, Value::Null)?;
    rep.name = "mixture".into();
    rep.summary = json!({
        "members": scn.family.len(),
        "fstar": star,
        "fstar_weights": scn.family.params.as_ref().map(|ps| ps[star].clone()),
        "degenerate_tests": scn.degenerate,
        "max_neighbor_tv": num(scn.max_neighbor_tv),
    });
    let mut table = format!(
        "members {}\nfstar {} weights {}\n",
        scn.family.len(),
        star,
        rep.summary["fstar_weights"]
    );
    for (t, d) in tests.iter().zip(&scn.degenerate) {
        if *d {
            writeln!(table, "degenerate test function {}", serde_json::to_string(t).unwrap()).unwrap();
        }
    }
    table.push_str(&summarize_masses(&rep));
    Ok(Outcome { report: rep, table, failed: false })
}
