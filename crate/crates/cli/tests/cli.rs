use std::path::Path;
use std::process::{Command, Output};

fn misspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_misspec"))
        .args(args)
        .env_remove("MISSPEC_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_unif_grid_prints_mass() {
    let o = misspec(&["check", "--assumption", "1", "--scenario", "unif-grid", "--eps", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("mass 0.0909"), "{out}");
    assert!(out.contains("holds"));
}

#[test]
fn counterexample_writes_one_row_per_replication_and_step() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex2.csv");
    let o = misspec(&[
        "counterexample",
        "--id",
        "example2",
        "--n-max",
        "40",
        "--reps",
        "100",
        "--seed",
        "7",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in ["n", "lower_bound", "log1msqrtMn"] {
        assert!(header.contains(&col), "{header:?}");
    }
    assert_eq!(lines.count(), 4000);
    assert!(text.starts_with("# example2\n# config: {"));
}

#[test]
fn empty_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "empty.toml", "");
    let o = misspec(&["--config", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ConfigError"), "{}", stderr(&o));
}

#[test]
fn validate_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "t.toml",
        "command = \"trajectory\"\nseed = 3\n[trajectory]\ntruth = \"unif(0,1)\"\nmembers = [\"unif(0,1)\", \"unif(0,2)\"]\n",
    );
    let o = misspec(&["validate", "--config", &p]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("ok\n"));
    for default in ["n_max = 200", "reps = 1", "every = 1", "metric = \"weighted_l1\"", "eps = [0.1]"] {
        assert!(out.contains(default), "{default} missing from\n{out}");
    }
}

#[test]
fn validate_names_the_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "neg.toml",
        "command = \"trajectory\"\nseed = 1\n[trajectory]\ntruth = \"unif(0,1)\"\nmembers = [\"unif(0,1)\"]\nn_max = -5\n",
    );
    let o = misspec(&["validate", "--config", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n_max"), "{}", stderr(&o));
}

#[test]
fn sampling_commands_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "noseed.toml",
        "command = \"trajectory\"\n[trajectory]\ntruth = \"unif(0,1)\"\nmembers = [\"unif(0,1)\"]\n",
    );
    let o = misspec(&["validate", "--config", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
    let o = misspec(&["counterexample", "--id", "example2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
    // The deterministic counterexample runs without one.
    let o = misspec(&["counterexample", "--id", "example1", "--k-max", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let top = write(dir.path(), "a.toml", "command = \"check\"\nsed = 3\n");
    let inner = write(dir.path(), "b.toml", "command = \"check\"\n[check]\nassumption = \"1\"\nepsilon = 0.1\n");
    let other = write(dir.path(), "c.toml", "command = \"check\"\n[project]\ntruth = \"unif(0,1)\"\n");
    for p in [top, inner, other] {
        let o = misspec(&["validate", "--config", &p]);
        assert_eq!(o.status.code(), Some(1), "{p}");
        assert!(stderr(&o).contains("ConfigError"));
    }
}

#[test]
fn failing_verdict_exits_with_two() {
    // Two equidistant normals: the second member has zero KL excess but is
    // far from the chosen projection.
    let o = misspec(&[
        "check",
        "--assumption",
        "2c",
        "--truth",
        "normal(0,1)",
        "--member",
        "normal(-1,1);normal(1,1)",
        "--eps",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("fails"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "t.toml",
        "command = \"trajectory\"\nseed = 3\n[trajectory]\ntruth = \"unif(0,1)\"\nmembers = [\"unif(0,1)\", \"unif(0,2)\"]\nn_max = 50\n",
    );
    let o = misspec(&["trajectory", "--config", &p, "--n-max", "20", "--seed", "9", "validate"]);
    // `validate` is its own subcommand, so combining is a usage error.
    assert_eq!(o.status.code(), Some(1));
    let out = dir.path().join("o.jsonl");
    let o = misspec(&[
        "trajectory",
        "--config",
        &p,
        "--n-max",
        "20",
        "--seed",
        "9",
        "--format",
        "jsonl",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let head: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(head["config"]["seed"], 9);
    assert_eq!(head["config"]["trajectory"]["n_max"], 20);
    assert_eq!(text.lines().count(), 21);
    // A subcommand that disagrees with the file is refused.
    let o = misspec(&["project", "--config", &p]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "command = \"mixture\"\nseed = 4\n[mixture]\nn_max = 60\nreps = 3\nevery = 5\n",
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = misspec(&["--config", &cfg, "--output", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("# config: {\"command\":\"mixture\""));
}

#[test]
fn inid_run_and_project_and_divergence() {
    let o = misspec(&["inid-run", "--seed", "2", "--n-max", "200", "--reps", "2", "--every", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("members 125"));

    let o = misspec(&["project", "--truth", "unif(0,1)", "--member", "unif(0,2);example1_fk(0.4)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("projection 0 (unif(0,2))"));

    let o = misspec(&["divergence", "--truth", "unif(0,1)", "--member", "example1_fk(0.4)", "--fstar", "example1_fstar"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // K(f0, f_b) = -log b.
    let want = format!("{:.6}", -(0.4f64).ln());
    assert!(stdout(&o).lines().any(|l| l.starts_with("kl_truth_member") && l.ends_with(&want)), "{}", stdout(&o));
}

#[test]
fn bad_density_specs_are_config_errors() {
    let o = misspec(&["project", "--truth", "gamma(1)", "--member", "unif(0,1)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("truth"));
}
