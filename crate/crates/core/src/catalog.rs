//! Densities by name, for configuration files and the command line.
//!
//! ```text
//! example1_fk(b) | example1_fstar | example2_fk(k) | example2_ga(a) | example2_f0
//! unif(lo, hi) | normal(mu, sigma) | student_t(df, loc, scale) | ald(tau[, loc])
//! discrete(p1, p2, ...) | mixture([d1, d2, ...], [w1, w2, ...])
//! ```

use crate::density::Density;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Arg {
    Num(f64),
    Dens(Density),
    List(Vec<Arg>),
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, what: &str) -> Error {
        Error::Config(format!("density spec {:?} at byte {}: {what}", self.src, self.pos))
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        (self.pos > start && self.s[start].is_ascii_alphabetic()).then(|| &self.src[start..self.pos])
    }

    fn number(&mut self) -> Result<f64> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && matches!(self.s[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E') {
            self.pos += 1;
        }
        self.src[start..self.pos].parse().map_err(|_| {
            self.pos = start;
            self.err("expected a number")
        })
    }

    fn arg(&mut self) -> Result<Arg> {
        self.ws();
        match self.s.get(self.pos) {
            Some(b'[') => {
                self.pos += 1;
                let mut v = Vec::new();
                if !self.eat(b']') {
                    loop {
                        v.push(self.arg()?);
                        if self.eat(b']') {
                            break;
                        }
                        self.expect(b',')?;
                    }
                }
                Ok(Arg::List(v))
            }
            Some(c) if c.is_ascii_alphabetic() => Ok(Arg::Dens(self.density()?)),
            _ => Ok(Arg::Num(self.number()?)),
        }
    }

    fn density(&mut self) -> Result<Density> {
        let start = self.pos;
        let name = self.ident().ok_or_else(|| self.err("expected a density name"))?;
        let mut args = Vec::new();
        if self.eat(b'(') && !self.eat(b')') {
            loop {
                args.push(self.arg()?);
                if self.eat(b')') {
                    break;
                }
                self.expect(b',')?;
            }
        }
        build(name, args).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{m} (in {:?})", &self.src[start..self.pos])),
            other => other,
        })
    }
}

fn nums(name: &str, args: &[Arg], n: std::ops::RangeInclusive<usize>) -> Result<Vec<f64>> {
    if !n.contains(&args.len()) {
        return Err(Error::Config(format!("{name} takes {n:?} numeric arguments, got {}", args.len())));
    }
    args.iter()
        .map(|a| match a {
            Arg::Num(x) => Ok(*x),
            _ => Err(Error::Config(format!("{name} expects numbers"))),
        })
        .collect()
}

fn build(name: &str, args: Vec<Arg>) -> Result<Density> {
    match name {
        "example1_fk" => Density::example1_member(nums(name, &args, 1..=1)?[0]),
        "example1_fstar" => {
            nums(name, &args, 0..=0)?;
            Density::uniform(0.0, 2.0)
        }
        "example2_fk" => {
            let k = nums(name, &args, 1..=1)?[0];
            if k.fract() != 0.0 || !(3.0..=u32::MAX as f64).contains(&k) {
                return Err(Error::Domain {
                    name: "k",
                    value: k,
                    domain: "integers >= 3",
                });
            }
            Density::example2_member(k as u32)
        }
        "example2_ga" => Density::example2_g(nums(name, &args, 1..=1)?[0]),
        "example2_f0" => {
            nums(name, &args, 0..=0)?;
            Ok(Density::example2_truth())
        }
        "unif" | "uniform" => {
            let a = nums(name, &args, 2..=2)?;
            Density::uniform(a[0], a[1])
        }
        "normal" => {
            let a = nums(name, &args, 2..=2)?;
            Density::normal(a[0], a[1])
        }
        "student_t" => {
            let a = nums(name, &args, 3..=3)?;
            Density::student_t(a[0], a[1], a[2])
        }
        "ald" => {
            let a = nums(name, &args, 1..=2)?;
            Density::ald(a[0], a.get(1).copied().unwrap_or(0.0))
        }
        "discrete" => Density::discrete(nums(name, &args, 1..=usize::MAX)?),
        "mixture" => {
            let [Arg::List(cs), Arg::List(ws)] = args.as_slice() else {
                return Err(Error::Config("mixture takes ([densities], [weights])".into()));
            };
            let comps = cs
                .iter()
                .map(|c| match c {
                    Arg::Dens(d) => Ok(d.clone()),
                    _ => Err(Error::Config("mixture components must be densities".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            let w = nums("mixture weights", ws, 0..=usize::MAX)?;
            Density::mixture(w, comps)
        }
        other => Err(Error::Config(format!("unknown density {other:?}"))),
    }
}

/// Parses a density spec such as `mixture([normal(-1,1), normal(1,1)], [0.3, 0.7])`.
pub fn catalog(spec: &str) -> Result<Density> {
    let mut p = Parser {
        s: spec.as_bytes(),
        pos: 0,
        src: spec,
    };
    let d = p.density()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(d.with_label(spec.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Point;

    #[test]
    fn parses_the_catalog() {
        let d = catalog("example1_fk(0.4)").unwrap();
        assert!((d.pdf(&Point::lebesgue(0.5)) - 0.4).abs() < 1e-15);
        assert!((d.pdf(&Point::lebesgue(1.2)) - 1.2).abs() < 1e-15);
        for s in [
            "example1_fstar",
            "example2_fk(5)",
            "example2_ga(0.6)",
            "example2_f0",
            "unif(0, 1)",
            "normal(0,1)",
            "student_t(3, 0, 1)",
            "ald(0.25)",
            "discrete(0.2, 0.8)",
            "mixture([normal(-1,1), normal(1, 1)], [0.3, 0.7])",
        ] {
            let d = catalog(s).unwrap();
            assert_eq!(d.label, s);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(catalog("example1_fk(0.5)"), Err(Error::Domain { .. })));
        assert!(matches!(catalog("example2_fk(2)"), Err(Error::Domain { .. })));
        assert!(matches!(catalog("example2_ga(1.5)"), Err(Error::Domain { .. })));
        assert!(matches!(
            catalog("mixture([normal(0,1), normal(1,1)], [0.3, 0.6])"),
            Err(Error::Weights(_))
        ));
        assert!(matches!(catalog("gamma(1)"), Err(Error::Config(_))));
        assert!(matches!(catalog("normal(0,1) x"), Err(Error::Config(_))));
        assert!(matches!(catalog("normal(0,"), Err(Error::Config(_))));
    }
}
