use serde::{Deserialize, Serialize};

/// Polynomial in the monomial basis, `coef[j]` multiplying `x^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub coef: Vec<f64>,
}

impl Poly {
    pub fn new(coef: Vec<f64>) -> Self {
        Poly { coef }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly {
            coef: self
                .coef
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| j as f64 * c)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coef.len().max(other.coef.len());
        Poly {
            coef: (0..n)
                .map(|j| self.coef.get(j).unwrap_or(&0.0) - other.coef.get(j).unwrap_or(&0.0))
                .collect(),
        }
    }
}

/// Equispaced grid of `n` points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Cartesian product of per-coordinate level sets.
pub fn coefficient_grid(levels: &[Vec<f64>]) -> Vec<Vec<f64>> {
    levels.iter().fold(vec![Vec::new()], |acc, lv| {
        acc.iter()
            .flat_map(|p| {
                lv.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner() {
        let p = Poly::new(vec![0.3, 0.4, -1.0]);
        assert!((p.eval(0.5) - (0.3 + 0.2 - 0.25)).abs() < 1e-15);
        assert_eq!(p.derivative().coef, vec![0.4, -2.0]);
    }

    #[test]
    fn grid_size() {
        let g = coefficient_grid(&[vec![0.0, 1.0], vec![1.0, 2.0, 3.0]]);
        assert_eq!(g.len(), 6);
        assert_eq!(g[5], vec![1.0, 3.0]);
    }
}
