use misspec::family::FiniteFamily;
use misspec::inid::{build_inid_scenario, inid_run, Design, InidConfig};
use misspec::posterior::{denominator_growth, run_trajectory, Geometry, TrajectoryConfig};
use misspec::scenarios::example2::{event_failure_probability, summary_count};
use misspec::scenarios::{example1_family, example2_simulate, RegressionKind};
use misspec::Density;

/// Share of replications whose `log_denominator + n beta` exceeds `level`
/// by step `n`.
fn growth_share(report: &misspec::report::ExperimentReport, n: usize, beta: f64, level: f64) -> f64 {
    let ri = report.column("replication").unwrap();
    let reps = report.rows.iter().map(|r| r[ri].as_u64().unwrap()).max().unwrap() + 1;
    let mut hit = 0;
    for rep in 0..reps {
        let sub = misspec::report::ExperimentReport {
            rows: report
                .rows
                .iter()
                .filter(|r| r[ri].as_u64() == Some(rep))
                .cloned()
                .collect(),
            ..report.clone()
        };
        let g = denominator_growth(&sub, &[beta]);
        if g.iter().any(|(m, v)| *m <= n && v[0] > level) {
            hit += 1;
        }
    }
    hit as f64 / reps as f64
}

fn trajectory(f0: &Density, fam: &FiniteFamily, star: usize) -> misspec::report::ExperimentReport {
    let geo = Geometry::from_metric(fam.len(), |_| Ok(0.0)).unwrap();
    let cfg = TrajectoryConfig {
        n_max: 200,
        seed: 21,
        reps: 100,
        every: 10,
    };
    run_trajectory(f0, fam, star, &geo, &[], &cfg, serde_json::Value::Null).unwrap()
}

#[test]
fn denominator_grows_well_specified_and_example1() {
    let level = 1e6f64.ln();
    let cs: Vec<f64> = (5..=20).map(|i| i as f64 / 10.0).collect();
    let fam = FiniteFamily::uniform(cs.iter().map(|&c| Density::uniform(0.0, c).unwrap()).collect()).unwrap();
    let f0 = Density::uniform(0.0, 1.0).unwrap();
    let rep = trajectory(&f0, &fam, 5);
    assert!(growth_share(&rep, 200, 0.1, level) >= 0.95);

    let (f0, fam, star) = example1_family(50).unwrap();
    let rep = trajectory(&f0, &fam, star);
    assert!(growth_share(&rep, 200, 0.1, level) >= 0.95);
}

fn inid_class_config(residual: Density) -> InidConfig {
    InidConfig {
        kind: RegressionKind::Ald { tau: 0.5 },
        theta0: vec![0.3, 0.4, 0.0],
        levels: Some(vec![
            vec![-0.7, -0.2, 0.3, 0.8, 1.3],
            vec![-1.6, -0.6, 0.4, 1.4, 2.4],
            vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        ]),
        bound: 6.0,
        residual,
    }
}

#[test]
fn inid_well_specified_concentrates() {
    // The ALD's own residual variance is 8, so at n = 500 members are spaced
    // one unit apart rather than on the finer misspecified-run grid.
    let mut cfg = inid_class_config(Density::ald(0.5, 0.0).unwrap());
    cfg.levels = Some(vec![vec![-0.7, 0.3, 1.3], vec![-0.6, 0.4, 1.4], vec![0.0]]);
    let scn = build_inid_scenario(&cfg).unwrap();
    let d = Design::cyclic(101, 62, 500).unwrap();
    let rep = inid_run(&scn, &d, 500, 0.1, 20, 3, 500).unwrap();
    assert!(summary_count(&rep, "mass_at_n_max_le_0.05") >= 18, "{}", rep.summary);
}

#[test]
fn inid_denominator_grows() {
    let scn = build_inid_scenario(&inid_class_config(Density::normal(0.0, 1.0).unwrap())).unwrap();
    let d = Design::cyclic(101, 62, 1000).unwrap();
    let rep = inid_run(&scn, &d, 1000, 0.1, 20, 5, 100).unwrap();
    assert!(growth_share(&rep, 1000, 0.05, 1e3f64.ln()) >= 0.95);
}

#[test]
fn example2_event_frequency_matches_exact_law() {
    let reps = 4000;
    let rep = example2_simulate(10, reps, 99).unwrap();
    let ni = rep.column("n").unwrap();
    let ei = rep.column("event").unwrap();
    let fails = rep
        .rows
        .iter()
        .filter(|r| r[ni].as_u64() == Some(10) && r[ei].as_bool() == Some(false))
        .count() as f64;
    let p = event_failure_probability(10);
    let sd = (reps as f64 * p * (1.0 - p)).sqrt();
    assert!((fails - reps as f64 * p).abs() <= 4.0 * sd, "{fails} vs {}", reps as f64 * p);
}
