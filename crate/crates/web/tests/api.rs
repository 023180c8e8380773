use misspec_web::api;
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn affinity_curve_for_example1_member() {
    // f_b against Unif(0,2) under Unif(0,1): the ratio is 2b on (0,1), so
    // h(alpha) = (2b)^alpha and K* = -log(2b).
    let b: f64 = 0.4;
    let v = parse(api::affinity_curve("unif(0,1)", "example1_fk(0.4)", "example1_fstar", 10).unwrap());
    let alpha = v["alpha"].as_array().unwrap();
    let h = v["h"].as_array().unwrap();
    assert_eq!(alpha.len(), 10);
    for (a, h) in alpha.iter().zip(h) {
        let a = a.as_f64().unwrap();
        assert!((h.as_f64().unwrap() - (2.0 * b).powf(a)).abs() < 1e-9);
    }
    assert!((v["kl_excess"].as_f64().unwrap() + (2.0 * b).ln()).abs() < 1e-9);
    assert!(api::affinity_curve("unif(0,1)", "bogus", "unif(0,1)", 5).is_err());
}

#[test]
fn example2_path_is_seeded() {
    let a = api::example2_path(30, 5).unwrap();
    assert_eq!(a, api::example2_path(30, 5).unwrap());
    let v = parse(a);
    assert_eq!(v["n"].as_array().unwrap().len(), 30);
    let lb: Vec<f64> = v["lower_bound"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(lb.iter().all(|b| (0.0..=1.0).contains(b)));
    assert!(api::example2_path(0, 5).is_err());
}

#[test]
fn posterior_path_concentrates_on_the_projection() {
    let members = "unif(0,1)\nunif(0,1.5)\nunif(0,2)\n";
    let v = parse(api::posterior_path("unif(0,1)", members, 0.1, 200, 3).unwrap());
    assert_eq!(v["fstar"], "unif(0,1)");
    let mass = v["mass"].as_array().unwrap();
    assert_eq!(mass.len(), 200);
    assert!(mass.last().unwrap().as_f64().unwrap() < 1e-6);
    assert!(api::posterior_path("unif(0,1)", members, -1.0, 10, 3).is_err());
}
