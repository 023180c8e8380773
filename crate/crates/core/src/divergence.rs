//! Kullback-Leibler divergence, KL excess over the projection, alpha-affinity
//! and the L1 distances (plain and weighted by `f0/f*`).

use serde::{Deserialize, Serialize};

use crate::density::{Density, Witness};
use crate::error::{domain, Error, Result};
use crate::measure::{integrate, BaseMeasure, Point};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    ClosedForm,
    MonteCarlo,
}

/// A divergence value. Infinite values carry the set that makes them so.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEstimate {
    pub value: f64,
    pub err: f64,
    pub method: Method,
    pub witness: Option<Witness>,
}

impl DivergenceEstimate {
    fn infinite(w: Witness) -> Self {
        DivergenceEstimate {
            value: f64::INFINITY,
            err: 0.0,
            method: Method::ClosedForm,
            witness: Some(w),
        }
    }

    fn quad(q: crate::measure::Quad) -> Self {
        DivergenceEstimate {
            value: q.value,
            err: q.err,
            method: Method::Quadrature,
            witness: None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.value == f64::INFINITY
    }
}

fn same_measure(a: &Density, b: &Density) -> Result<()> {
    if a.measure_kind() != b.measure_kind() {
        return Err(Error::MeasureMismatch(format!(
            "{} is on {:?}, {} is on {:?}",
            a.label,
            a.measure_kind(),
            b.label,
            b.measure_kind()
        )));
    }
    Ok(())
}

fn breaks_of(ds: &[&Density]) -> Vec<f64> {
    ds.iter().flat_map(|d| d.breakpoints()).collect()
}

/// Support of `f0` escaping `fstar` makes every excess and ratio undefined.
fn check_fstar(f0: &Density, fstar: &Density) -> Result<()> {
    same_measure(f0, fstar)?;
    if let Some(w) = f0.support().escapes(&fstar.support()) {
        return Err(Error::Config(format!(
            "projection {} misses truth mass on {w:?}",
            fstar.label
        )));
    }
    Ok(())
}

/// `K(f0, f) = E0 log(f0/f)`, `+inf` when `f0` charges a set where `f = 0`.
pub fn kl(f0: &Density, f: &Density, tol: f64) -> Result<DivergenceEstimate> {
    same_measure(f0, f)?;
    if let Some(w) = f0.support().escapes(&f.support()) {
        return Ok(DivergenceEstimate::infinite(w));
    }
    let q = f0.expect(
        |p| f0.log_pdf(p) - f.log_pdf(p),
        &breaks_of(&[f]),
        tol,
    )?;
    Ok(DivergenceEstimate::quad(q))
}

/// `K(f0, f) - K(f0, f*)`, computed as `E0 log(f*/f)`.
///
/// The direct form stays finite when both divergences are infinite but
/// their difference is not.
pub fn kl_excess(
    f0: &Density,
    f: &Density,
    fstar: &Density,
    tol: f64,
) -> Result<DivergenceEstimate> {
    check_fstar(f0, fstar)?;
    same_measure(f0, f)?;
    if let Some(w) = f0.support().escapes(&f.support()) {
        return Ok(DivergenceEstimate::infinite(w));
    }
    let q = f0.expect(
        |p| fstar.log_pdf(p) - f.log_pdf(p),
        &breaks_of(&[f, fstar]),
        tol,
    )?;
    Ok(DivergenceEstimate::quad(q))
}

/// `E0 (f/f*)^p` for any `p > 0`.
pub fn ratio_moment(
    f0: &Density,
    f: &Density,
    fstar: &Density,
    p: f64,
    tol: f64,
) -> Result<DivergenceEstimate> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(domain("p", p, "(0, inf)"));
    }
    check_fstar(f0, fstar)?;
    same_measure(f0, f)?;
    let q = f0.expect(
        |pt| {
            let lf = f.log_pdf(pt);
            if lf == f64::NEG_INFINITY {
                0.0
            } else {
                (p * (lf - fstar.log_pdf(pt))).exp()
            }
        },
        &breaks_of(&[f, fstar]),
        tol,
    )?;
    Ok(DivergenceEstimate::quad(q))
}

/// `h*_alpha(f) = E0 (f/f*)^alpha` for `alpha` in `[0, 1]`; exactly 1 at 0.
pub fn alpha_affinity(
    f0: &Density,
    f: &Density,
    fstar: &Density,
    alpha: f64,
    tol: f64,
) -> Result<DivergenceEstimate> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain("alpha", alpha, "[0, 1]"));
    }
    if alpha == 0.0 {
        check_fstar(f0, fstar)?;
        return Ok(DivergenceEstimate {
            value: 1.0,
            err: 0.0,
            method: Method::ClosedForm,
            witness: None,
        });
    }
    ratio_moment(f0, f, fstar, alpha, tol)
}

/// `g(alpha, f) = (1 - h*_alpha(f)) / alpha`, equal to the KL excess at
/// `alpha = 0`.
pub fn g_alpha(
    f0: &Density,
    f: &Density,
    fstar: &Density,
    alpha: f64,
    tol: f64,
) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(kl_excess(f0, f, fstar, tol)?.value);
    }
    let h = alpha_affinity(f0, f, fstar, alpha, tol)?.value;
    Ok((1.0 - h) / alpha)
}

/// `L1(mu0)` distance `E0 |f/f* - g/f*|`.
pub fn weighted_l1(
    f0: &Density,
    f: &Density,
    g: &Density,
    fstar: &Density,
    tol: f64,
) -> Result<DivergenceEstimate> {
    check_fstar(f0, fstar)?;
    same_measure(f, g)?;
    let q = f0.expect(
        |p| {
            let ls = fstar.log_pdf(p);
            ((f.log_pdf(p) - ls).exp() - (g.log_pdf(p) - ls).exp()).abs()
        },
        &breaks_of(&[f, g, fstar]),
        tol,
    )?;
    Ok(DivergenceEstimate::quad(q))
}

/// Plain `L1(mu)` distance `int |f - g| dmu`.
pub fn l1(f: &Density, g: &Density, tol: f64) -> Result<DivergenceEstimate> {
    same_measure(f, g)?;
    let mut s = f.support();
    let sg = g.support();
    s.pieces.extend(sg.pieces);
    s.atoms.extend(sg.atoms);
    s.normalize();
    let m = BaseMeasure {
        pieces: s.pieces,
        atoms: s
            .atoms
            .iter()
            .map(|&at| crate::measure::Atom { at, weight: 1.0 })
            .collect(),
    }
    .split_at(&breaks_of(&[f, g]));
    let q = integrate(|p| (f.pdf(p) - g.pdf(p)).abs(), &m, tol)?;
    Ok(DivergenceEstimate::quad(q))
}

/// Monte Carlo estimate of `K(f0, f)` with a three-sigma error bar.
pub fn kl_monte_carlo(
    f0: &Density,
    f: &Density,
    n: usize,
    seed: u64,
) -> Result<DivergenceEstimate> {
    same_measure(f0, f)?;
    if let Some(w) = f0.support().escapes(&f.support()) {
        return Ok(DivergenceEstimate::infinite(w));
    }
    let mut r = rng::stream(seed, 0);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let p: Point = f0.sample(&mut r);
        let x = f0.log_pdf(&p) - f.log_pdf(&p);
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    let sd = (m2 / (n.max(2) - 1) as f64).sqrt();
    Ok(DivergenceEstimate {
        value: mean,
        err: 3.0 * sd / (n as f64).sqrt(),
        method: Method::MonteCarlo,
        witness: None,
    })
}

/// Closed-form versions on a finite sample space, for probability vectors
/// indexed alike. Terms with `f0_i = 0` are skipped.
pub mod discrete {
    /// `E0 (f/f*)^alpha`, exactly 1 at `alpha = 0`.
    pub fn affinity(f0: &[f64], fstar: &[f64], f: &[f64], alpha: f64) -> f64 {
        if alpha == 0.0 {
            return 1.0;
        }
        ratio_moment(f0, fstar, f, alpha)
    }

    pub fn ratio_moment(f0: &[f64], fstar: &[f64], f: &[f64], p: f64) -> f64 {
        f0.iter()
            .zip(fstar)
            .zip(f)
            .filter(|((a, _), _)| **a > 0.0)
            .map(|((a, s), x)| if *x == 0.0 { 0.0 } else { a * (x / s).powf(p) })
            .sum()
    }

    pub fn kl(f0: &[f64], f: &[f64]) -> f64 {
        f0.iter()
            .zip(f)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, x)| {
                if *x == 0.0 {
                    f64::INFINITY
                } else {
                    a * (a / x).ln()
                }
            })
            .sum()
    }

    /// `E0 log(f*/f)`.
    pub fn kl_excess(f0: &[f64], fstar: &[f64], f: &[f64]) -> f64 {
        f0.iter()
            .zip(fstar)
            .zip(f)
            .filter(|((a, _), _)| **a > 0.0)
            .map(|((a, s), x)| {
                if *x == 0.0 {
                    f64::INFINITY
                } else {
                    a * (s / x).ln()
                }
            })
            .sum()
    }

    pub fn g_alpha(f0: &[f64], fstar: &[f64], f: &[f64], alpha: f64) -> f64 {
        if alpha == 0.0 {
            kl_excess(f0, fstar, f)
        } else {
            (1.0 - affinity(f0, fstar, f, alpha)) / alpha
        }
    }

    /// `E0 |f/f* - g/f*|`.
    pub fn weighted_l1(f0: &[f64], fstar: &[f64], f: &[f64], g: &[f64]) -> f64 {
        (0..f0.len())
            .filter(|&i| f0[i] > 0.0)
            .map(|i| f0[i] * ((f[i] - g[i]) / fstar[i]).abs())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-10;

    fn unif(a: f64, b: f64) -> Density {
        Density::uniform(a, b).unwrap()
    }

    #[test]
    fn example1_kl_is_minus_log_b() {
        let f0 = unif(0.0, 1.0);
        for b in [0.05, 0.25, 0.4, 0.49] {
            let f = Density::example1_member(b).unwrap();
            let k = kl(&f0, &f, TOL).unwrap();
            assert!((k.value + b.ln()).abs() < 1e-10, "b={b}");
            assert!(k.err <= TOL);
        }
        let k = kl(&f0, &unif(0.0, 2.0), TOL).unwrap();
        assert!((k.value - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn excess_matches_difference_of_two_quadratures() {
        let f0 = unif(0.0, 1.0);
        let fs = unif(0.0, 2.0);
        let f = Density::example1_member(0.25).unwrap();
        let direct = kl_excess(&f0, &f, &fs, TOL).unwrap().value;
        let two = kl(&f0, &f, TOL).unwrap().value - kl(&f0, &fs, TOL).unwrap().value;
        assert!((direct - two).abs() < 1e-10);
        assert!((direct + 0.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn infinite_kl_has_witness() {
        let f0 = unif(0.0, 1.0);
        let g = Density::example2_g(0.6).unwrap();
        let k = kl(&f0, &g, TOL).unwrap();
        assert!(k.is_infinite());
        assert_eq!(k.witness, Some(Witness::Interval(0.6, 1.0)));
    }

    #[test]
    fn kl_of_self_is_zero() {
        for d in [
            unif(0.0, 1.0),
            Density::normal(1.0, 2.0).unwrap(),
            Density::ald(0.3, 0.0).unwrap(),
        ] {
            assert!(kl(&d, &d, TOL).unwrap().value.abs() < 1e-12);
        }
    }

    #[test]
    fn normal_kl_closed_form() {
        let f0 = Density::normal(0.0, 1.0).unwrap();
        let f = Density::normal(0.7, 1.5).unwrap();
        let want = (1.5f64).ln() + (1.0 + 0.49) / (2.0 * 2.25) - 0.5;
        assert!((kl(&f0, &f, TOL).unwrap().value - want).abs() < 1e-10);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let f0 = Density::normal(0.0, 1.0).unwrap();
        let f = Density::ald(0.5, 0.2).unwrap();
        let q = kl(&f0, &f, TOL).unwrap().value;
        let m = kl_monte_carlo(&f0, &f, 200_000, 3).unwrap();
        assert!((q - m.value).abs() < m.err, "{q} vs {}", m.value);
    }

    #[test]
    fn affinity_endpoints() {
        let f0 = unif(0.0, 1.0);
        let fs = unif(0.0, 2.0);
        let f = Density::example1_member(0.3).unwrap();
        assert_eq!(alpha_affinity(&f0, &f, &fs, 0.0, TOL).unwrap().value, 1.0);
        // f/f* = 2b on the support of f0.
        let h1 = alpha_affinity(&f0, &f, &fs, 1.0, TOL).unwrap().value;
        assert!((h1 - 0.6).abs() < 1e-12);
        assert!(alpha_affinity(&f0, &f, &fs, 1.5, TOL).is_err());
    }

    #[test]
    fn example1_distances() {
        let f0 = unif(0.0, 1.0);
        let fs = unif(0.0, 2.0);
        let f = Density::example1_member(0.4).unwrap();
        let w = weighted_l1(&f0, &f, &fs, &fs, TOL).unwrap().value;
        assert!((w - 0.2).abs() < 1e-12);
        let d = l1(&f, &fs, TOL).unwrap().value;
        assert!((d - (1.5 - 0.8)).abs() < 1e-12);
        assert!(d > 0.25);
    }

    #[test]
    fn measure_mismatch() {
        let a = Density::discrete(vec![0.5, 0.5]).unwrap();
        let b = unif(0.0, 1.0);
        assert!(matches!(kl(&a, &b, TOL), Err(Error::MeasureMismatch(_))));
    }

    #[test]
    fn discrete_paths_agree_with_density_paths() {
        let p0 = vec![0.2, 0.3, 0.5];
        let ps = vec![0.3, 0.3, 0.4];
        let pf = vec![0.1, 0.6, 0.3];
        let (f0, fs, f) = (
            Density::discrete(p0.clone()).unwrap(),
            Density::discrete(ps.clone()).unwrap(),
            Density::discrete(pf.clone()).unwrap(),
        );
        let a = alpha_affinity(&f0, &f, &fs, 0.4, TOL).unwrap().value;
        assert!((a - discrete::affinity(&p0, &ps, &pf, 0.4)).abs() < 1e-15);
        let k = kl_excess(&f0, &f, &fs, TOL).unwrap().value;
        assert!((k - discrete::kl_excess(&p0, &ps, &pf)).abs() < 1e-15);
        let k = kl(&f0, &f, TOL).unwrap().value;
        assert!((k - discrete::kl(&p0, &pf)).abs() < 1e-15);
    }
}
