//! Kullback-Leibler projection of the truth onto a finite family.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::divergence::kl;
use crate::error::{Error, Result};
use crate::family::FiniteFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub index: usize,
    pub kl_at_min: f64,
    /// Gap to the second-smallest divergence (`inf` for a single member).
    pub runner_up_gap: f64,
    /// Set when another member is within the tie tolerance; the smallest
    /// index is kept.
    pub tie: bool,
    pub kls: Vec<f64>,
}

/// Gaps below this count as ties.
pub fn tie_tolerance(tol: f64) -> f64 {
    (10.0 * tol).max(1e-9)
}

pub fn kl_all(f0: &Density, family: &FiniteFamily, tol: f64) -> Result<Vec<f64>> {
    family
        .members
        .par_iter()
        .map(|f| kl(f0, f, tol).map(|d| d.value))
        .collect()
}

pub fn kl_minimizer(f0: &Density, family: &FiniteFamily, tol: f64) -> Result<Projection> {
    let kls = kl_all(f0, family, tol)?;
    minimizer_of(kls, tol)
}

fn minimizer_of(kls: Vec<f64>, tol: f64) -> Result<Projection> {
    if kls.iter().all(|k| k.is_infinite()) {
        return Err(Error::AllInfinite);
    }
    let min = kls.iter().copied().fold(f64::INFINITY, f64::min);
    let tt = tie_tolerance(tol);
    let index = kls.iter().position(|&k| k - min <= tt).unwrap();
    let others = kls
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != index)
        .map(|(_, &k)| k);
    let second = others.fold(f64::INFINITY, f64::min);
    let gap = second - kls[index];
    Ok(Projection {
        index,
        kl_at_min: kls[index],
        runner_up_gap: gap,
        tie: gap <= tt,
        kls,
    })
}

/// Divergence profile `(param, K(f0, f))`, sorted by parameter.
pub fn kl_profile(f0: &Density, family: &FiniteFamily, tol: f64) -> Result<Vec<(Vec<f64>, f64)>> {
    let kls = kl_all(f0, family, tol)?;
    let params = family
        .params
        .clone()
        .unwrap_or_else(|| (0..family.len()).map(|i| vec![i as f64]).collect());
    let mut out: Vec<(Vec<f64>, f64)> = params.into_iter().zip(kls).collect();
    out.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// One-parameter projection: grid scan followed by `passes` zoomed grids,
/// each ten times finer around the current best point.
pub fn refine_1d<B>(f0: &Density, build: B, grid: &[f64], passes: usize, tol: f64) -> Result<(f64, f64)>
where
    B: Fn(f64) -> Result<Density> + Sync,
{
    if grid.len() < 2 {
        return Err(Error::Config("refinement needs at least two grid points".into()));
    }
    let eval = |ts: &[f64]| -> Result<Vec<f64>> {
        ts.par_iter()
            .map(|&t| kl(f0, &build(t)?, tol).map(|d| d.value))
            .collect()
    };
    let mut ts = grid.to_vec();
    let mut step = grid
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min);
    let (lo, hi) = (grid[0].min(grid[grid.len() - 1]), grid[0].max(grid[grid.len() - 1]));
    let mut best = minimizer_of(eval(&ts)?, tol)?;
    let mut t_best = ts[best.index];
    for _ in 0..passes {
        let fine = step / 10.0;
        ts = (-10..=10)
            .map(|i| (t_best + i as f64 * fine).clamp(lo, hi))
            .collect();
        best = minimizer_of(eval(&ts)?, tol)?;
        t_best = ts[best.index];
        step = fine;
    }
    Ok((t_best, best.kl_at_min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_projection_is_unif_0_2() {
        let f0 = Density::uniform(0.0, 1.0).unwrap();
        let mut members: Vec<Density> = (3..=20)
            .map(|k| Density::example1_member(0.5 - 1.0 / k as f64).unwrap())
            .collect();
        members.push(Density::uniform(0.0, 2.0).unwrap());
        let fam = FiniteFamily::uniform(members).unwrap();
        let p = kl_minimizer(&f0, &fam, 1e-10).unwrap();
        assert_eq!(p.index, 18);
        assert!((p.kl_at_min - 2f64.ln()).abs() < 1e-10);
        assert!(!p.tie);
    }

    #[test]
    fn ties_keep_smallest_index() {
        let f0 = Density::uniform(0.0, 1.0).unwrap();
        let u = Density::uniform(0.0, 2.0).unwrap();
        let fam = FiniteFamily::uniform(vec![u.clone(), u]).unwrap();
        let p = kl_minimizer(&f0, &fam, 1e-10).unwrap();
        assert_eq!(p.index, 0);
        assert!(p.tie);
    }

    #[test]
    fn all_infinite_is_an_error() {
        let f0 = Density::uniform(0.0, 1.0).unwrap();
        let fam = FiniteFamily::uniform(vec![Density::example2_g(0.5).unwrap()]).unwrap();
        assert_eq!(kl_minimizer(&f0, &fam, 1e-10), Err(Error::AllInfinite));
    }

    #[test]
    fn ald_location_projection_is_the_median() {
        let f0 = Density::normal(0.0, 1.0).unwrap();
        let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.1).collect();
        let (t, _) = refine_1d(&f0, |t| Density::ald(0.5, t), &grid, 2, 1e-10).unwrap();
        assert!(t.abs() <= 1e-3, "{t}");
    }
}
