use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Population trace `P(t)` sampled at strictly increasing times (s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    times: Vec<f64>,
    populations: Vec<f64>,
    /// Per-sample residual weights (inverse standard deviations).
    weights: Option<Vec<f64>>,
}

impl DecayCurve {
    pub fn new(times: Vec<f64>, populations: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("decay curve is empty"));
        }
        if times.len() != populations.len() {
            return Err(Error::invalid(format!(
                "{} times but {} populations",
                times.len(),
                populations.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("times must be finite and strictly increasing"));
        }
        if let Some(p) = populations.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("population {p} outside [0, 1]")));
        }
        if let Some(w) = &weights {
            if w.len() != times.len() {
                return Err(Error::invalid(format!(
                    "{} weights for {} samples",
                    w.len(),
                    times.len()
                )));
            }
            if w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(Error::invalid("weights must be finite and positive"));
            }
        }
        Ok(Self { times, populations, weights })
    }

    /// Evaluates `f` on `times`, clamping into `[0, 1]`.
    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let populations = times.iter().map(|&t| f(t).clamp(0.0, 1.0)).collect();
        Self::new(times, populations, None)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.populations.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DecayCurve::new(vec![0.0, 1.0], vec![1.0, 0.5], None).is_ok());
        assert!(DecayCurve::new(vec![0.0, 0.0], vec![1.0, 0.5], None).is_err());
        assert!(DecayCurve::new(vec![0.0, 1.0], vec![1.0], None).is_err());
        assert!(DecayCurve::new(vec![0.0, 1.0], vec![1.0, 1.5], None).is_err());
        assert!(DecayCurve::new(vec![0.0, 1.0], vec![1.0, 0.5], Some(vec![1.0])).is_err());
        assert!(DecayCurve::new(vec![], vec![], None).is_err());
    }
}
