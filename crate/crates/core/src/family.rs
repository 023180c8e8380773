use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};

/// Finitely many densities on a common base measure, with prior weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteFamily {
    pub members: Vec<Density>,
    pub prior: Vec<f64>,
    /// Optional parameter vector per member, used for sorting profiles and
    /// for refinement.
    pub params: Option<Vec<Vec<f64>>>,
}

impl FiniteFamily {
    pub fn new(members: Vec<Density>, prior: Vec<f64>) -> Result<Self> {
        if members.is_empty() || members.len() != prior.len() {
            return Err(Error::Weights(format!(
                "{} members but {} prior weights",
                members.len(),
                prior.len()
            )));
        }
        if prior.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Weights("negative or non-finite prior weight".into()));
        }
        let s: f64 = prior.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Weights(format!("prior sums to {s}")));
        }
        let kind = members[0].measure_kind();
        if let Some(m) = members.iter().find(|m| m.measure_kind() != kind) {
            return Err(Error::MeasureMismatch(format!(
                "{} differs from {}",
                m.label, members[0].label
            )));
        }
        Ok(FiniteFamily {
            members,
            prior,
            params: None,
        })
    }

    pub fn uniform(members: Vec<Density>) -> Result<Self> {
        let n = members.len();
        Self::new(members, vec![1.0 / n as f64; n])
    }

    /// Prior proportional to `weights`.
    pub fn weighted(members: Vec<Density>, weights: &[f64]) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        Self::new(members, weights.iter().map(|w| w / s).collect())
    }

    pub fn with_params(mut self, params: Vec<Vec<f64>>) -> Result<Self> {
        if params.len() != self.members.len() {
            return Err(Error::Config("one parameter vector per member".into()));
        }
        self.params = Some(params);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}
