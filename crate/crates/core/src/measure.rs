//! Base measures (Lebesgue pieces plus counting atoms) and quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on integrand evaluations per call.
pub const EVAL_BUDGET: usize = 1_000_000;

/// A point of the sample space.
///
/// Atoms are tagged so a density is never evaluated against the wrong part
/// of the base measure. `tail` optionally carries `log(1 - sqrt(y))` exactly
/// for points too close to 1 to be told apart in `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub y: f64,
    pub atom: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<f64>,
}

impl Point {
    pub fn lebesgue(y: f64) -> Self {
        Point {
            y,
            atom: false,
            tail: None,
        }
    }

    pub fn atom(y: f64) -> Self {
        Point {
            y,
            atom: true,
            tail: None,
        }
    }

    /// Lebesgue point given by `t = log(1 - sqrt(y))`, with `t < 0`.
    pub fn from_tail(t: f64) -> Self {
        let s = -t.exp_m1();
        Point {
            y: s * s,
            atom: false,
            tail: Some(t),
        }
    }

    /// `log(1 - sqrt(y))`, exact when the point was built from its tail.
    pub fn log1m_sqrt(&self) -> f64 {
        match self.tail {
            Some(t) => t,
            None => (-self.y.sqrt()).ln_1p(),
        }
    }
}

impl From<f64> for Point {
    fn from(y: f64) -> Self {
        Point::lebesgue(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub at: f64,
    pub weight: f64,
}

/// Lebesgue measure on a union of intervals plus weighted point masses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BaseMeasure {
    pub pieces: Vec<(f64, f64)>,
    pub atoms: Vec<Atom>,
}

impl BaseMeasure {
    pub fn lebesgue(lo: f64, hi: f64) -> Self {
        BaseMeasure {
            pieces: vec![(lo, hi)],
            atoms: Vec::new(),
        }
    }

    pub fn real_line() -> Self {
        Self::lebesgue(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Counting measure on the given locations.
    pub fn counting(at: &[f64]) -> Self {
        BaseMeasure {
            pieces: Vec::new(),
            atoms: at.iter().map(|&at| Atom { at, weight: 1.0 }).collect(),
        }
    }

    pub fn with_atoms(mut self, at: &[f64]) -> Self {
        self.atoms
            .extend(at.iter().map(|&at| Atom { at, weight: 1.0 }));
        self
    }

    /// Same measure with every piece cut at the given breakpoints.
    pub fn split_at(&self, breaks: &[f64]) -> Self {
        let mut pieces = Vec::new();
        for &(lo, hi) in &self.pieces {
            let mut cuts: Vec<f64> = breaks
                .iter()
                .copied()
                .filter(|&b| b > lo && b < hi && b.is_finite())
                .collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut a = lo;
            for c in cuts {
                pieces.push((a, c));
                a = c;
            }
            pieces.push((a, hi));
        }
        BaseMeasure {
            pieces,
            atoms: self.atoms.clone(),
        }
    }
}

/// Result of a numerical integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub value: f64,
    pub err: f64,
    pub evals: usize,
}

/// Integrates `g` against `m` to absolute tolerance `tol`.
///
/// Atoms are summed exactly. Lebesgue pieces use globally adaptive
/// Gauss-Kronrod (7/15) bisection; infinite ends are mapped onto a bounded
/// interval first. The error estimate is the raw Kronrod-Gauss difference,
/// which is conservative for smooth integrands.
pub fn integrate<G>(g: G, m: &BaseMeasure, tol: f64) -> Result<Quad>
where
    G: Fn(&Point) -> f64,
{
    let mut atom_sum = 0.0;
    for a in &m.atoms {
        let v = g(&Point::atom(a.at));
        if !v.is_finite() {
            return Err(Error::NonFinite { at: a.at });
        }
        atom_sum += a.weight * v;
    }
    let q = integrate_pieces(|y| g(&Point::lebesgue(y)), &m.pieces, tol)?;
    Ok(Quad {
        value: q.value + atom_sum,
        err: q.err,
        evals: q.evals + m.atoms.len(),
    })
}

/// Integrates a real function over a single (possibly infinite) interval.
pub fn integrate_interval<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Quad>
where
    F: Fn(f64) -> f64,
{
    integrate_pieces(f, &[(lo, hi)], tol)
}

#[derive(Clone, Copy)]
enum Map {
    Identity,
    /// x = a + t/(1-t)
    Upper(f64),
    /// x = b - (1-t)/t
    Lower(f64),
}

impl Map {
    #[inline]
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Identity => (t, 1.0),
            Map::Upper(a) => {
                let s = 1.0 - t;
                (a + t / s, 1.0 / (s * s))
            }
            Map::Lower(b) => (b - (1.0 - t) / t, 1.0 / (t * t)),
        }
    }
}

struct Segment {
    lo: f64,
    hi: f64,
    map: Map,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, map: Map) -> Result<(f64, f64)> {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let eval = |t: f64| -> Result<f64> {
        let (x, jac) = map.apply(t);
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFinite { at: x });
        }
        // Decaying integrands may underflow against a huge Jacobian.
        Ok(if v == 0.0 { 0.0 } else { v * jac })
    };
    let fc = eval(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = eval(c - dx)? + eval(c + dx)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

pub(crate) fn integrate_pieces<F>(f: F, pieces: &[(f64, f64)], tol: f64) -> Result<Quad>
where
    F: Fn(f64) -> f64,
{
    let mut parts: Vec<(f64, f64, Map)> = Vec::new();
    for &(lo, hi) in pieces {
        if !(lo < hi) {
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => parts.push((lo, hi, Map::Identity)),
            (true, false) => parts.push((0.0, 1.0, Map::Upper(lo))),
            (false, true) => parts.push((0.0, 1.0, Map::Lower(hi))),
            (false, false) => {
                parts.push((0.0, 1.0, Map::Lower(0.0)));
                parts.push((0.0, 1.0, Map::Upper(0.0)));
            }
        }
    }
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    let mut total_err = 0.0;
    for (lo, hi, map) in parts {
        let (value, err) = gk15(&f, lo, hi, map)?;
        evals += 15;
        total_err += err;
        heap.push(Segment {
            lo,
            hi,
            map,
            value,
            err,
        });
    }
    // Segments too narrow to split further keep their error.
    let mut frozen_err = 0.0;
    while total_err > tol {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.lo + seg.hi);
        if !(mid > seg.lo && mid < seg.hi) || (seg.hi - seg.lo) < 1e-15 * mid.abs().max(1e-300) {
            frozen_err += seg.err;
            total_err = frozen_err + heap.iter().map(|s| s.err).sum::<f64>();
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if evals + 30 > EVAL_BUDGET {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.lo, mid, seg.map)?;
        let (v2, e2) = gk15(&f, mid, seg.hi, seg.map)?;
        evals += 30;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment {
            lo: seg.lo,
            hi: mid,
            map: seg.map,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            lo: mid,
            hi: seg.hi,
            map: seg.map,
            value: v2,
            err: e2,
        });
        // Re-sum periodically to stop drift in the running error.
        if evals % 3000 == 0 {
            total_err = frozen_err + heap.iter().map(|s| s.err).sum::<f64>();
        }
    }
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let err = frozen_err + heap.iter().map(|s| s.err).sum::<f64>();
    if err > tol {
        return Err(Error::ToleranceNotMet { err, tol, evals });
    }
    Ok(Quad { value, err, evals })
}
