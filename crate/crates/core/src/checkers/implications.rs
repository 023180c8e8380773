//! The chain (iii) => (ii) => (i) between the three separation conditions
//! on a set `A` of densities:
//!
//! * (i)   `inf_A K*(f) > eps`
//! * (ii)  `sup_A inf_alpha h*_alpha(f) < e^-delta`
//! * (iii) `sup_A h*_alpha0(f) < e^-eta`
//!
//! On convex `A` the three are equivalent.

use serde::{Deserialize, Serialize};

use super::hull::{maximize, minimize, Hull};
use super::minimax::golden_min;
use crate::divergence::discrete;
use crate::error::{Error, Result};

/// Existence verdicts use this threshold on the computed margins.
pub const EXISTS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Instance {
    Finite {
        f0: Vec<f64>,
        fstar: Vec<f64>,
        members: Vec<Vec<f64>>,
    },
    Hull(Hull),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplicationParams {
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub alpha0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationReport {
    /// `inf_A K*`.
    pub eps_max: f64,
    /// `-log sup_A inf_alpha h*_alpha`.
    pub delta_max: f64,
    /// `-log sup_A h*_alpha0`.
    pub eta_max: f64,
    pub i_holds: bool,
    pub ii_holds: bool,
    pub iii_holds: bool,
    pub i_exists: bool,
    pub ii_exists: bool,
    pub iii_exists: bool,
    /// On hulls: whether (i) and "(iii) for some dyadic alpha0" agree.
    pub convex_all_or_none: Option<bool>,
    /// No reported condition holds without the weaker ones.
    pub consistent: bool,
}

fn inf_alpha(h: impl Fn(f64) -> f64) -> f64 {
    golden_min(h, 0.0, 1.0, 1e-10).1
}

struct Margins {
    inf_k: f64,
    sup_inf_h: f64,
    sup_h0: f64,
}

fn margins(inst: &Instance, alpha0: f64) -> Margins {
    match inst {
        Instance::Finite { f0, fstar, members } => {
            let mut m = Margins {
                inf_k: f64::INFINITY,
                sup_inf_h: f64::NEG_INFINITY,
                sup_h0: f64::NEG_INFINITY,
            };
            for f in members {
                let h0 = discrete::affinity(f0, fstar, f, alpha0);
                let ih = inf_alpha(|a| discrete::affinity(f0, fstar, f, a)).min(h0);
                m.inf_k = m.inf_k.min(discrete::kl_excess(f0, fstar, f));
                m.sup_inf_h = m.sup_inf_h.max(ih);
                m.sup_h0 = m.sup_h0.max(h0);
            }
            m
        }
        Instance::Hull(h) => {
            let d = h.dim();
            let sup_h0 = h.affinity_sup_certificate(alpha0, 1e-12).2;
            let sup_inf_h = maximize(
                d,
                |l| inf_alpha(|a| h.affinity(l, a)).min(h.affinity(l, alpha0)),
                1e-10,
            )
            .1
            .min(sup_h0);
            let inf_k = minimize(d, |l| h.kl_excess(l), 1e-12).1;
            Margins {
                inf_k,
                sup_inf_h,
                sup_h0,
            }
        }
    }
}

pub fn check_implications(inst: &Instance, p: &ImplicationParams) -> Result<ImplicationReport> {
    if !(p.alpha0 > 0.0 && p.alpha0 < 1.0) {
        return Err(Error::Domain {
            name: "alpha0",
            value: p.alpha0,
            domain: "(0, 1)",
        });
    }
    let m = margins(inst, p.alpha0);
    let eps_max = m.inf_k;
    let delta_max = -m.sup_inf_h.ln();
    let eta_max = -m.sup_h0.ln();
    let i_exists = eps_max > EXISTS_TOL;
    let ii_exists = delta_max > EXISTS_TOL;
    let iii_exists = eta_max > EXISTS_TOL;
    let i_holds = eps_max > p.eps;
    let ii_holds = m.sup_inf_h < (-p.delta).exp();
    let iii_holds = m.sup_h0 < (-p.eta).exp();
    let params_ordered = p.eps < p.delta && p.delta <= p.eta;
    let consistent = (!iii_exists || ii_exists)
        && (!ii_exists || i_exists)
        && (!params_ordered || ((!iii_holds || ii_holds) && (!ii_holds || i_holds)));
    let convex_all_or_none = match inst {
        Instance::Hull(h) => {
            let any = (1..=40).any(|i| {
                h.affinity_sup_certificate(0.5f64.powi(i), 1e-12).2 < 1.0 - 1e-15
            });
            Some(i_exists == any)
        }
        Instance::Finite { .. } => None,
    };
    Ok(ImplicationReport {
        eps_max,
        delta_max,
        eta_max,
        i_holds,
        ii_holds,
        iii_holds,
        i_exists,
        ii_exists,
        iii_exists,
        convex_all_or_none,
        consistent,
    })
}

/// From (i) at `eps` on a hull, builds (iii): the largest dyadic `alpha0`
/// with `inf_A g(alpha0, .) > eps`, and `eta = alpha0 * eps`. Returns
/// `(alpha0, eta, certified sup_A h*_alpha0)`.
pub fn witness_iii_from_i(hull: &Hull, eps: f64) -> Option<(f64, f64, f64)> {
    let d = hull.dim();
    if minimize(d, |l| hull.kl_excess(l), 1e-12).1 <= eps {
        return None;
    }
    for i in 1..=40 {
        let a = 0.5f64.powi(i);
        if minimize(d, |l| hull.g_alpha(l, a), 1e-12).1 > eps {
            let eta = a * eps;
            let ub = hull.affinity_sup_certificate(a, 1e-12).2;
            if ub < (-eta).exp() {
                return Some((a, eta, ub));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_hull_satisfies_all_three() {
        // Truth near the first point, hull concentrated on the last two.
        let f0 = vec![0.7, 0.2, 0.1];
        let fs = vec![0.6, 0.25, 0.15];
        let g = vec![vec![0.1, 0.3, 0.6], vec![0.1, 0.6, 0.3]];
        let h = Hull::new(f0, fs, g).unwrap();
        let p = ImplicationParams {
            eps: 0.3,
            delta: 0.35,
            eta: 0.4,
            alpha0: 0.5,
        };
        let r = check_implications(&Instance::Hull(h.clone()), &p).unwrap();
        assert!(r.i_exists && r.ii_exists && r.iii_exists && r.consistent);
        assert_eq!(r.convex_all_or_none, Some(true));
        assert!(r.eps_max >= r.delta_max - 1e-12 && r.delta_max >= r.eta_max - 1e-12);
        let (a, eta, ub) = witness_iii_from_i(&h, 0.3).unwrap();
        assert!(a > 0.0 && ub < (-eta).exp());
    }

    #[test]
    fn hull_through_fstar_satisfies_none() {
        let f0 = vec![0.5, 0.3, 0.2];
        let fs = vec![0.4, 0.4, 0.2];
        let g = vec![fs.clone(), vec![0.2, 0.2, 0.6]];
        let h = Hull::new(f0, fs, g).unwrap();
        let p = ImplicationParams {
            eps: 0.1,
            delta: 0.2,
            eta: 0.2,
            alpha0: 0.5,
        };
        let r = check_implications(&Instance::Hull(h), &p).unwrap();
        assert!(!r.i_exists && !r.ii_exists && !r.iii_exists);
        assert_eq!(r.convex_all_or_none, Some(true));
    }
}
