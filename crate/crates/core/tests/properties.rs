use proptest::prelude::*;

use misspec::checkers::hull::Hull;
use misspec::checkers::minimax::golden_min;
use misspec::divergence::discrete;
use misspec::family::FiniteFamily;
use misspec::posterior::PosteriorState;
use misspec::projection::{kl_minimizer, tie_tolerance};
use misspec::Density;

/// Probability vector of length `k` with every entry at least
/// `floor / (k (1 + floor))`.
fn prob(k: usize, floor: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, k).prop_map(move |v| {
        let raw: Vec<f64> = v.iter().map(|x| floor + x).collect();
        let s: f64 = raw.iter().sum();
        if s > 0.0 {
            raw.iter().map(|x| x / s).collect()
        } else {
            vec![1.0 / k as f64; k]
        }
    })
}

/// `(f0, f*, f, g)` on a common space of 2 to 6 points.
fn quad(floor: f64) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(move |k| (prob(k, floor), prob(k, floor), prob(k, floor), prob(k, floor)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn holder_step((f0, fs, f, _) in quad(0.01), a in 0.05f64..=1.0, r in 0.01f64..0.99) {
        let ap = a * r;
        let h = |x| discrete::affinity(&f0, &fs, &f, x);
        prop_assert!(h(ap) <= h(a).powf(ap / a) + 1e-10);
    }

    #[test]
    fn convex_in_alpha((f0, fs, f, _) in quad(0.01), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let h = |x| discrete::affinity(&f0, &fs, &f, x);
        prop_assert!(h(0.5 * (a + b)) <= 0.5 * (h(a) + h(b)) + 1e-10);
    }

    #[test]
    fn concave_in_f((f0, fs, f, g) in quad(0.01), lam in 0.0f64..=1.0, a in 0.0f64..=1.0) {
        let m: Vec<f64> = f.iter().zip(&g).map(|(x, y)| lam * x + (1.0 - lam) * y).collect();
        let h = |p: &[f64]| discrete::affinity(&f0, &fs, p, a);
        prop_assert!(h(&m) >= lam * h(&f) + (1.0 - lam) * h(&g) - 1e-10);
    }

    #[test]
    fn continuity_bound((f0, fs, f, g) in quad(0.01), a in 0.01f64..=1.0) {
        let d = discrete::weighted_l1(&f0, &fs, &f, &g);
        let gap = (discrete::affinity(&f0, &fs, &f, a) - discrete::affinity(&f0, &fs, &g, a)).abs();
        prop_assert!(gap <= d.powf(a) + 1e-10, "{gap} > {d}^{a}");
    }

    #[test]
    fn monotone_limit((f0, fs, f, _) in quad(0.2)) {
        let grid = [1.0, 0.5, 0.1, 0.01, 1e-3];
        let g: Vec<f64> = grid.iter().map(|&a| discrete::g_alpha(&f0, &fs, &f, a)).collect();
        for w in g.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "{g:?}");
        }
        let ks = discrete::kl_excess(&f0, &fs, &f);
        prop_assert!((g[4] - ks).abs() <= 1e-2);
    }

    #[test]
    fn convex_family_bounds((f0, g1, g2, g3) in quad(0.05), l in prob(3, 0.0)) {
        let h0 = Hull::new(f0.clone(), f0.clone(), vec![g1, g2, g3]).unwrap();
        let fs = h0.point(&h0.kl_projection());
        let f = h0.point(&l);
        prop_assert!(discrete::ratio_moment(&f0, &fs, &f, 1.0) <= 1.0 + 1e-10);
        let ks = discrete::kl_excess(&f0, &fs, &f).max(0.0);
        prop_assert!(discrete::weighted_l1(&f0, &fs, &fs, &f) <= 2.0 * ks.sqrt() + 1e-8);
    }

    /// `P(sum T_i > e^-eps) <= e^eps sum_i inf_alpha E T_i^alpha` on a
    /// finite sample space.
    #[test]
    fn sum_of_nonnegative_variables(
        p in prob(5, 0.0),
        t in prop::collection::vec(prop::collection::vec(0.0f64..3.0, 5), 1..=3),
        eps in 0.0f64..2.0,
    ) {
        let lhs: f64 = (0..5)
            .filter(|&w| t.iter().map(|ti| ti[w]).sum::<f64>() > (-eps).exp())
            .map(|w| p[w])
            .sum();
        let rhs: f64 = t
            .iter()
            .map(|ti| {
                let m = |a: f64| (0..5).map(|w| p[w] * ti[w].powf(a)).sum::<f64>();
                golden_min(m, 0.0, 1.0, 1e-10).1
            })
            .sum::<f64>()
            * eps.exp();
        prop_assert!(lhs <= rhs + 1e-10, "{lhs} > {rhs}");
    }

    #[test]
    fn projection_idempotent(f0 in prob(4, 0.05), others in prop::collection::vec(prob(4, 0.05), 1..4)) {
        let mut members: Vec<Density> = others.into_iter().map(|p| Density::discrete(p).unwrap()).collect();
        members.push(Density::discrete(f0.clone()).unwrap());
        let fam = FiniteFamily::uniform(members).unwrap();
        let d0 = Density::discrete(f0).unwrap();
        let p = kl_minimizer(&d0, &fam, 1e-12).unwrap();
        prop_assert!(p.kl_at_min <= 1e-12);
    }

    #[test]
    fn projection_stable_under_far_additions(
        f0 in prob(4, 0.05),
        others in prop::collection::vec(prob(4, 0.05), 2..5),
        extra in prob(4, 0.05),
    ) {
        let d0 = Density::discrete(f0.clone()).unwrap();
        let base: Vec<Density> = others.iter().map(|p| Density::discrete(p.clone()).unwrap()).collect();
        let p = kl_minimizer(&d0, &FiniteFamily::uniform(base.clone()).unwrap(), 1e-12).unwrap();
        prop_assume!(!p.tie);
        // Starve the heaviest truth atom until the newcomer is a full nat
        // worse than the current minimum.
        let top = (0..4).max_by(|&i, &j| f0[i].total_cmp(&f0[j])).unwrap();
        let mut extra = extra;
        while discrete::kl(&f0, &extra) < p.kl_at_min + 1.0 {
            extra[top] *= 0.5;
            let s: f64 = extra.iter().sum();
            extra.iter_mut().for_each(|x| *x /= s);
        }
        let mut more = base;
        more.push(Density::discrete(extra).unwrap());
        let q = kl_minimizer(&d0, &FiniteFamily::uniform(more).unwrap(), 1e-12).unwrap();
        prop_assert_eq!(p.index, q.index);
    }

    #[test]
    fn ties_are_flagged(f0 in prob(3, 0.05), a in prob(3, 0.05)) {
        let d0 = Density::discrete(f0).unwrap();
        let m = Density::discrete(a).unwrap();
        let fam = FiniteFamily::uniform(vec![m.clone(), m]).unwrap();
        let p = kl_minimizer(&d0, &fam, 1e-12).unwrap();
        prop_assert!(p.runner_up_gap < tie_tolerance(1e-12));
        prop_assert!(p.tie);
    }

    #[test]
    fn posterior_baseline_invariance(
        lls in prop::collection::vec(prop::collection::vec(-5.0f64..0.0, 4), 1..20),
        shifts in prop::collection::vec(-50.0f64..50.0, 20),
    ) {
        let prior = [0.1, 0.2, 0.3, 0.4];
        let mask = [true, false, true, false];
        let mut a = PosteriorState::new(&prior, 1).unwrap();
        let mut b = PosteriorState::new(&prior, 1).unwrap();
        for (ll, s) in lls.iter().zip(&shifts) {
            a.update_with(ll).unwrap();
            let shifted: Vec<f64> = ll.iter().map(|x| x + s).collect();
            b.update_with(&shifted).unwrap();
        }
        prop_assert!((a.mass(&mask) - b.mass(&mask)).abs() <= 1e-12);
    }

    #[test]
    fn posterior_exchangeable(
        lls in prop::collection::vec(prop::collection::vec(-5.0f64..0.0, 3), 2..30),
        seed in any::<u64>(),
    ) {
        let prior = [0.2, 0.3, 0.5];
        let mut a = PosteriorState::new(&prior, 0).unwrap();
        for ll in &lls {
            a.update_with(ll).unwrap();
        }
        let mut perm = lls.clone();
        // Deterministic shuffle from the seed.
        let mut s = seed;
        for i in (1..perm.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut b = PosteriorState::new(&prior, 0).unwrap();
        for ll in &perm {
            b.update_with(ll).unwrap();
        }
        for m in 0..3 {
            let mask: Vec<bool> = (0..3).map(|j| j == m).collect();
            prop_assert!((a.mass(&mask) - b.mass(&mask)).abs() <= 1e-12);
        }
    }

    #[test]
    fn minus_infinity_is_permanent(
        lls in prop::collection::vec(prop::collection::vec(-5.0f64..0.0, 3), 1..20),
        kill in 0usize..20,
    ) {
        let mut st = PosteriorState::new(&[0.3, 0.3, 0.4], 0).unwrap();
        let mut dead = false;
        for (n, ll) in lls.iter().enumerate() {
            let mut ll = ll.clone();
            if n == kill {
                ll[2] = f64::NEG_INFINITY;
                dead = true;
            }
            st.update_with(&ll).unwrap();
            if dead {
                prop_assert_eq!(st.mass(&[false, false, true]), 0.0);
            }
        }
    }
}
