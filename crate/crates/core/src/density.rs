//! Densities with respect to a mixed base measure, and the catalog used by
//! the experiments.

use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::measure::{integrate_pieces, Point, Quad};
use crate::rng::{self, Stream};

/// Which dominating measure a density is written against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// Lebesgue measure on the line plus counting measure on atoms.
    Real,
    /// Counting measure on `{0, .., k-1}`.
    Discrete(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kind {
    /// Constant `value` on each closed `[lo, hi]`, plus point masses.
    Piecewise {
        pieces: Vec<(f64, f64, f64)>,
        atoms: Vec<(f64, f64)>,
    },
    Normal { mu: f64, sigma: f64 },
    StudentT { df: f64, loc: f64, scale: f64 },
    /// Asymmetric Laplace with unit scale, located so that `cdf(loc) = tau`.
    Ald { tau: f64, loc: f64 },
    /// Truth of the second counterexample: CDF `2cy` below 1/2 and
    /// `1 - (-log(1 - sqrt y))^(-1/2)` above.
    Example2Truth,
    Mixture {
        weights: Vec<f64>,
        components: Vec<Density>,
    },
    Discrete { probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub kind: Kind,
    pub label: String,
}

/// Where a density puts positive mass.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Support {
    pub pieces: Vec<(f64, f64)>,
    pub atoms: Vec<f64>,
}

/// Pieces of a density used to compute expectations under it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Interval { lo: f64, hi: f64 },
    Atom { at: f64, mass: f64 },
    /// Mass between CDF levels `u_lo` and `u_hi`, reached through the
    /// quantile function.
    QuantileBand { u_lo: f64, u_hi: f64 },
}

/// Draws from one density on one seeded stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<Point>,
    pub seed: u64,
    pub stream: u64,
}

const LN_2PI_HALF: f64 = 0.918_938_533_204_672_8;

/// `-log(1 - 1/sqrt 2)`: the value of `-log(1 - sqrt y)` at `y = 1/2`.
pub fn example2_l_half() -> f64 {
    -(-std::f64::consts::FRAC_1_SQRT_2).ln_1p()
}

/// Mass the second counterexample's truth puts on `[0, 1/2]`.
pub fn example2_c() -> f64 {
    1.0 - example2_l_half().powf(-0.5)
}

fn in_closed(lo: f64, hi: f64, p: &Point) -> bool {
    if p.tail.is_some() && p.y >= 1.0 {
        // Really just below 1.
        lo < 1.0 && hi >= 1.0
    } else {
        lo <= p.y && p.y <= hi
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn ald_rho(tau: f64, z: f64) -> f64 {
    if z <= 0.0 {
        (tau - 1.0) * z
    } else {
        tau * z
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Weights("negative or non-finite weight".into()));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Weights(format!("weights sum to {s}")));
    }
    Ok(())
}

impl Density {
    fn new(kind: Kind, label: impl Into<String>) -> Self {
        Density {
            kind,
            label: label.into(),
        }
    }

    /// Piecewise-constant density; pieces are `(lo, hi, value)`.
    pub fn piecewise(
        pieces: Vec<(f64, f64, f64)>,
        atoms: Vec<(f64, f64)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut mass = 0.0;
        for &(lo, hi, v) in &pieces {
            if !(lo < hi && lo.is_finite() && hi.is_finite() && v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("bad piece ({lo}, {hi}, {v})")));
            }
            mass += (hi - lo) * v;
        }
        for &(_, w) in &atoms {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Weights(format!("atom mass {w}")));
            }
            mass += w;
        }
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::Weights(format!("total mass {mass}")));
        }
        Ok(Self::new(Kind::Piecewise { pieces, atoms }, label))
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(domain("hi - lo", hi - lo, "(0, inf)"));
        }
        Self::piecewise(
            vec![(lo, hi, 1.0 / (hi - lo))],
            vec![],
            format!("Unif({lo},{hi})"),
        )
    }

    /// First counterexample member: `b` on (0,1), `2(1-b)` on (1,1.5).
    pub fn example1_member(b: f64) -> Result<Self> {
        if !(b > 0.0 && b < 0.5) {
            return Err(domain("b", b, "(0, 1/2)"));
        }
        Self::piecewise(
            vec![(0.0, 1.0, b), (1.0, 1.5, 2.0 * (1.0 - b))],
            vec![],
            format!("ex1_b={b}"),
        )
    }

    /// Second counterexample, discrete-tail member `f_k`, `k >= 3`.
    pub fn example2_member(k: u32) -> Result<Self> {
        if k < 3 {
            return Err(domain("k", k as f64, "integers >= 3"));
        }
        let kf = k as f64;
        Self::piecewise(
            vec![(0.0, 1.0, 0.5 - 1.0 / kf)],
            vec![(kf, 0.5 + 1.0 / kf)],
            format!("ex2_f{k}"),
        )
    }

    /// Second counterexample, continuous member `g_a`, `0 < a <= 1`.
    pub fn example2_g(a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(domain("a", a, "(0, 1]"));
        }
        Self::piecewise(
            vec![(0.0, a, 0.5), (1.0, 2.0, 1.0 - 0.5 * a)],
            vec![],
            format!("ex2_g{a}"),
        )
    }

    pub fn example2_truth() -> Self {
        Self::new(Kind::Example2Truth, "ex2_f0")
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain("sigma", sigma, "(0, inf)"));
        }
        Ok(Self::new(Kind::Normal { mu, sigma }, format!("N({mu},{sigma})")))
    }

    pub fn student_t(df: f64, loc: f64, scale: f64) -> Result<Self> {
        if !(df > 0.0 && scale > 0.0) {
            return Err(domain("df", df, "(0, inf)"));
        }
        Ok(Self::new(
            Kind::StudentT { df, loc, scale },
            format!("t{df}({loc},{scale})"),
        ))
    }

    pub fn ald(tau: f64, loc: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(domain("tau", tau, "(0, 1)"));
        }
        Ok(Self::new(Kind::Ald { tau, loc }, format!("ALD{tau}({loc})")))
    }

    pub fn mixture(weights: Vec<f64>, components: Vec<Density>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::Weights("one weight per component required".into()));
        }
        check_weights(&weights)?;
        let kind = components[0].measure_kind();
        if components.iter().any(|c| c.measure_kind() != kind) {
            return Err(Error::MeasureMismatch("mixture components".into()));
        }
        let label = format!(
            "mix[{}]",
            components
                .iter()
                .zip(&weights)
                .map(|(c, w)| format!("{w}*{}", c.label))
                .collect::<Vec<_>>()
                .join("+")
        );
        Ok(Self::new(Kind::Mixture { weights, components }, label))
    }

    pub fn discrete(probs: Vec<f64>) -> Result<Self> {
        check_weights(&probs)?;
        let label = format!("disc{}", probs.len());
        Ok(Self::new(Kind::Discrete { probs }, label))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn measure_kind(&self) -> MeasureKind {
        match &self.kind {
            Kind::Discrete { probs } => MeasureKind::Discrete(probs.len()),
            Kind::Mixture { components, .. } => components[0].measure_kind(),
            _ => MeasureKind::Real,
        }
    }

    pub fn log_pdf(&self, p: &Point) -> f64 {
        match &self.kind {
            Kind::Piecewise { pieces, atoms } => {
                if p.atom {
                    atoms
                        .iter()
                        .find(|(at, _)| *at == p.y)
                        .map_or(f64::NEG_INFINITY, |(_, w)| w.ln())
                } else {
                    pieces
                        .iter()
                        .find(|(lo, hi, _)| in_closed(*lo, *hi, p))
                        .map_or(f64::NEG_INFINITY, |(_, _, v)| v.ln())
                }
            }
            _ if p.atom && !matches!(self.kind, Kind::Discrete { .. } | Kind::Mixture { .. }) => {
                f64::NEG_INFINITY
            }
            Kind::Normal { mu, sigma } => {
                let z = (p.y - mu) / sigma;
                -0.5 * z * z - sigma.ln() - LN_2PI_HALF
            }
            Kind::StudentT { df, loc, scale } => {
                let z = (p.y - loc) / scale;
                ln_gamma(0.5 * (df + 1.0))
                    - ln_gamma(0.5 * df)
                    - 0.5 * (df * std::f64::consts::PI).ln()
                    - scale.ln()
                    - 0.5 * (df + 1.0) * (z * z / df).ln_1p()
            }
            Kind::Ald { tau, loc } => (tau * (1.0 - tau)).ln() - ald_rho(*tau, p.y - loc),
            Kind::Example2Truth => {
                if p.tail.is_none() && !(p.y > 0.0 && p.y < 1.0) {
                    return f64::NEG_INFINITY;
                }
                if p.tail.is_none() && p.y <= 0.5 {
                    return (2.0 * example2_c()).ln();
                }
                let t = p.log1m_sqrt();
                let l = -t;
                -1.5 * l.ln() - 4f64.ln() - 0.5 * p.y.ln() - t
            }
            Kind::Mixture {
                weights,
                components,
            } => {
                let terms: Vec<f64> = weights
                    .iter()
                    .zip(components)
                    .filter(|(w, _)| **w > 0.0)
                    .map(|(w, c)| w.ln() + c.log_pdf(p))
                    .collect();
                log_sum_exp(&terms)
            }
            Kind::Discrete { probs } => {
                let i = p.y as usize;
                if p.atom && p.y >= 0.0 && (i as f64) == p.y && i < probs.len() {
                    probs[i].ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn pdf(&self, p: &Point) -> f64 {
        self.log_pdf(p).exp()
    }

    /// `P(Y <= y)`, atoms included.
    pub fn cdf(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Piecewise { pieces, atoms } => {
                let cont: f64 = pieces
                    .iter()
                    .map(|&(lo, hi, v)| v * (y.min(hi) - lo).max(0.0))
                    .sum();
                let disc: f64 = atoms.iter().filter(|(at, _)| *at <= y).map(|a| a.1).sum();
                (cont + disc).min(1.0)
            }
            Kind::Normal { mu, sigma } => std_normal_cdf((y - mu) / sigma),
            Kind::StudentT { df, loc, scale } => {
                use statrs::distribution::{ContinuousCDF, StudentsT};
                StudentsT::new(*loc, *scale, *df)
                    .map(|d| d.cdf(y))
                    .unwrap_or(f64::NAN)
            }
            Kind::Ald { tau, loc } => {
                let z = y - loc;
                if z <= 0.0 {
                    tau * ((1.0 - tau) * z).exp()
                } else {
                    1.0 - (1.0 - tau) * (-tau * z).exp()
                }
            }
            Kind::Example2Truth => {
                if y <= 0.0 {
                    0.0
                } else if y <= 0.5 {
                    2.0 * example2_c() * y
                } else if y < 1.0 {
                    1.0 - (-(-y.sqrt()).ln_1p()).powf(-0.5)
                } else {
                    1.0
                }
            }
            Kind::Mixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(y))
                .sum(),
            Kind::Discrete { probs } => probs
                .iter()
                .enumerate()
                .filter(|(i, _)| (*i as f64) <= y)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// Generalized inverse of the CDF. Defined for all kinds except
    /// mixtures, which sample by component instead.
    pub fn quantile(&self, u: f64) -> Point {
        match &self.kind {
            Kind::Piecewise { pieces, atoms } => {
                // Walk the parts in order of location.
                let mut parts: Vec<(f64, Option<(f64, f64)>, f64)> = pieces
                    .iter()
                    .map(|&(lo, hi, v)| (lo, Some((hi, v)), (hi - lo) * v))
                    .chain(atoms.iter().map(|&(at, w)| (at, None, w)))
                    .collect();
                parts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                let mut last = Point::lebesgue(f64::NAN);
                for (lo, piece, mass) in parts {
                    if mass <= 0.0 {
                        continue;
                    }
                    last = match piece {
                        Some((hi, _)) => Point::lebesgue(hi),
                        None => Point::atom(lo),
                    };
                    if u <= acc + mass {
                        return match piece {
                            Some((hi, v)) => Point::lebesgue((lo + (u - acc) / v).min(hi)),
                            None => Point::atom(lo),
                        };
                    }
                    acc += mass;
                }
                last
            }
            Kind::Normal { mu, sigma } => {
                use statrs::distribution::{ContinuousCDF, Normal};
                Point::lebesgue(Normal::new(*mu, *sigma).unwrap().inverse_cdf(u))
            }
            Kind::StudentT { df, loc, scale } => {
                use statrs::distribution::{ContinuousCDF, StudentsT};
                Point::lebesgue(StudentsT::new(*loc, *scale, *df).unwrap().inverse_cdf(u))
            }
            Kind::Ald { tau, loc } => {
                if u <= *tau {
                    Point::lebesgue(loc + (u / tau).ln() / (1.0 - tau))
                } else {
                    Point::lebesgue(loc - ((1.0 - u) / (1.0 - tau)).ln() / tau)
                }
            }
            Kind::Example2Truth => {
                let c = example2_c();
                if u <= c {
                    Point::lebesgue(u / (2.0 * c))
                } else {
                    let s = 1.0 - u;
                    Point::from_tail(-1.0 / (s * s))
                }
            }
            Kind::Mixture { .. } => Point::lebesgue(f64::NAN),
            Kind::Discrete { probs } => {
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u <= acc && *p > 0.0 {
                        return Point::atom(i as f64);
                    }
                }
                let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
                Point::atom(last as f64)
            }
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> Point {
        match &self.kind {
            Kind::Normal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                Point::lebesgue(mu + sigma * z)
            }
            Kind::StudentT { df, loc, scale } => {
                let z: f64 = StudentT::new(*df).unwrap().sample(rng);
                Point::lebesgue(loc + scale * z)
            }
            Kind::Mixture {
                weights,
                components,
            } => {
                let u = rng::open_unit(rng);
                let mut acc = 0.0;
                for (w, c) in weights.iter().zip(components) {
                    acc += w;
                    if u <= acc {
                        return c.sample(rng);
                    }
                }
                components.last().unwrap().sample(rng)
            }
            _ => self.quantile(rng::open_unit(rng)),
        }
    }

    pub fn sample_batch(&self, n: usize, seed: u64, stream: u64) -> SampleBatch {
        let mut rng = rng::stream(seed, stream);
        SampleBatch {
            values: (0..n).map(|_| self.sample(&mut rng)).collect(),
            seed,
            stream,
        }
    }

    pub fn support(&self) -> Support {
        match &self.kind {
            Kind::Piecewise { pieces, atoms } => Support {
                pieces: pieces
                    .iter()
                    .filter(|p| p.2 > 0.0)
                    .map(|&(lo, hi, _)| (lo, hi))
                    .collect(),
                atoms: atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0).collect(),
            },
            Kind::Normal { .. } | Kind::StudentT { .. } | Kind::Ald { .. } => Support {
                pieces: vec![(f64::NEG_INFINITY, f64::INFINITY)],
                atoms: vec![],
            },
            Kind::Example2Truth => Support {
                pieces: vec![(0.0, 1.0)],
                atoms: vec![],
            },
            Kind::Mixture {
                weights,
                components,
            } => {
                let mut s = Support::default();
                for (w, c) in weights.iter().zip(components) {
                    if *w > 0.0 {
                        let cs = c.support();
                        s.pieces.extend(cs.pieces);
                        s.atoms.extend(cs.atoms);
                    }
                }
                s.normalize();
                s
            }
            Kind::Discrete { probs } => Support {
                pieces: vec![],
                atoms: probs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(i, _)| i as f64)
                    .collect(),
            },
        }
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = match &self.kind {
            Kind::Piecewise { pieces, .. } => {
                pieces.iter().flat_map(|p| [p.0, p.1]).collect::<Vec<_>>()
            }
            Kind::Normal { mu, .. } => vec![*mu],
            Kind::StudentT { loc, .. } => vec![*loc],
            Kind::Ald { loc, .. } => vec![*loc],
            Kind::Example2Truth => vec![0.0, 0.5, 1.0],
            Kind::Mixture { components, .. } => {
                components.iter().flat_map(|c| c.breakpoints()).collect()
            }
            Kind::Discrete { .. } => vec![],
        };
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn segments(&self) -> Vec<Segment> {
        match &self.kind {
            Kind::Piecewise { pieces, atoms } => pieces
                .iter()
                .filter(|p| p.2 > 0.0)
                .map(|&(lo, hi, _)| Segment::Interval { lo, hi })
                .chain(
                    atoms
                        .iter()
                        .filter(|a| a.1 > 0.0)
                        .map(|&(at, mass)| Segment::Atom { at, mass }),
                )
                .collect(),
            Kind::Example2Truth => vec![
                Segment::Interval { lo: 0.0, hi: 0.5 },
                Segment::QuantileBand {
                    u_lo: example2_c(),
                    u_hi: 1.0,
                },
            ],
            Kind::Mixture {
                weights,
                components,
            } => {
                let s = self.support();
                let mut segs: Vec<Segment> = s
                    .pieces
                    .iter()
                    .map(|&(lo, hi)| Segment::Interval { lo, hi })
                    .collect();
                for a in s.atoms {
                    let mass: f64 = weights
                        .iter()
                        .zip(components)
                        .map(|(w, c)| w * c.pdf(&Point::atom(a)))
                        .sum();
                    segs.push(Segment::Atom { at: a, mass });
                }
                segs
            }
            Kind::Discrete { probs } => probs
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(i, &mass)| Segment::Atom { at: i as f64, mass })
                .collect(),
            _ => self
                .support()
                .pieces
                .iter()
                .map(|&(lo, hi)| Segment::Interval { lo, hi })
                .collect(),
        }
    }

    /// `E[h(Y)]` under this density, to absolute tolerance `tol`.
    ///
    /// `breaks` lists extra points where `h` may jump or kink.
    pub fn expect<H>(&self, h: H, breaks: &[f64], tol: f64) -> Result<Quad>
    where
        H: Fn(&Point) -> f64,
    {
        let mut own = self.breakpoints();
        own.extend_from_slice(breaks);
        let mut value = 0.0;
        let mut err = 0.0;
        let mut evals = 0;
        let mut intervals = Vec::new();
        let mut bands = Vec::new();
        for seg in self.segments() {
            match seg {
                Segment::Atom { at, mass } => {
                    let v = h(&Point::atom(at));
                    if !v.is_finite() {
                        return Err(Error::NonFinite { at });
                    }
                    value += mass * v;
                    evals += 1;
                }
                Segment::Interval { lo, hi } => intervals.push((lo, hi)),
                Segment::QuantileBand { u_lo, u_hi } => bands.push((u_lo, u_hi)),
            }
        }
        let split = |pieces: &[(f64, f64)], cuts: &[f64]| {
            crate::measure::BaseMeasure {
                pieces: pieces.to_vec(),
                atoms: vec![],
            }
            .split_at(cuts)
            .pieces
        };
        let n_parts = (!intervals.is_empty()) as usize + (!bands.is_empty()) as usize;
        let part_tol = tol / n_parts.max(1) as f64;
        if !intervals.is_empty() {
            let pieces = split(&intervals, &own);
            let q = integrate_pieces(
                |y| {
                    let p = Point::lebesgue(y);
                    let d = self.pdf(&p);
                    if d == 0.0 {
                        0.0
                    } else {
                        h(&p) * d
                    }
                },
                &pieces,
                part_tol,
            )?;
            value += q.value;
            err += q.err;
            evals += q.evals;
        }
        if !bands.is_empty() {
            let ucuts: Vec<f64> = own.iter().map(|&b| self.cdf(b)).collect();
            let pieces = split(&bands, &ucuts);
            let q = integrate_pieces(|u| h(&self.quantile(u)), &pieces, part_tol)?;
            value += q.value;
            err += q.err;
            evals += q.evals;
        }
        Ok(Quad { value, err, evals })
    }
}

impl Support {
    /// Sorts pieces and merges overlapping ones; dedups atoms.
    pub fn normalize(&mut self) {
        self.pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for &(lo, hi) in &self.pieces {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        self.pieces = merged;
        self.atoms.sort_by(f64::total_cmp);
        self.atoms.dedup();
    }

    /// A part of `self` of positive size that `other` misses, if any.
    pub fn escapes(&self, other: &Support) -> Option<Witness> {
        let mut o = other.clone();
        o.normalize();
        for &(lo, hi) in &self.pieces {
            let mut cursor = lo;
            for &(olo, ohi) in &o.pieces {
                if ohi <= cursor {
                    continue;
                }
                if olo >= hi {
                    break;
                }
                if olo > cursor {
                    return Some(Witness::Interval(cursor, olo));
                }
                cursor = cursor.max(ohi);
                if cursor >= hi {
                    break;
                }
            }
            if cursor < hi {
                return Some(Witness::Interval(cursor, hi));
            }
        }
        self.atoms
            .iter()
            .find(|a| !o.atoms.contains(a))
            .map(|&a| Witness::Atom(a))
    }
}

/// A set where the truth has mass but a model has none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    Interval(f64, f64),
    Atom(f64),
}
