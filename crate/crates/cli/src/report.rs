//! JSON run report.

use std::collections::BTreeMap;

use fluxkit::numerics::FitResult;
use serde::Serialize;

use crate::config::Task;

/// A reported number with its unit and, for fitted values, its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub unit: &'static str,
}

impl Quantity {
    pub fn new(value: f64, unit: &'static str) -> Self {
        Self { value, stderr: None, unit }
    }

    pub fn fitted(value: f64, stderr: f64, unit: &'static str) -> Self {
        Self { value, stderr: Some(stderr), unit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub converged: bool,
    pub identifiable: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub dof: usize,
}

impl From<&FitResult> for Convergence {
    fn from(f: &FitResult) -> Self {
        Self {
            converged: f.converged,
            identifiable: f.identifiable,
            iterations: f.iterations,
            residual_norm: f.residual_norm,
            dof: f.dof,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub task: Task,
    pub seed: u64,
    /// SHA-256 over the config bytes and every input file read.
    pub input_digest: String,
    pub parameters: BTreeMap<String, Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Convergence>,
    pub warnings: Vec<String>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
}
