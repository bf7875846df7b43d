//! One module per task. Each checks its own parameter tree, computes, and
//! hands back tables and report entries; nothing is written here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{Context, Task};
use crate::error::CliError;
use crate::report::{Convergence, Quantity};
use crate::table::Table;

pub mod echo;
pub mod esr;
pub mod field;
pub mod freeze;
pub mod hyperpol;
pub mod spectrum;
pub mod telegraph;

#[derive(Debug, Default)]
pub struct TaskOutput {
    pub parameters: BTreeMap<String, Quantity>,
    pub convergence: Option<Convergence>,
    pub warnings: Vec<String>,
    pub tables: Vec<(String, Table)>,
}

impl TaskOutput {
    pub fn set(&mut self, name: impl Into<String>, q: Quantity) {
        self.parameters.insert(name.into(), q);
    }

    pub fn table(&mut self, file: impl Into<String>, t: Table) {
        self.tables.push((file.into(), t));
    }
}

pub fn run(task: Task, params: &toml::Table, ctx: &mut Context) -> Result<TaskOutput, CliError> {
    match task {
        Task::Spectrum => spectrum::run(params),
        Task::FieldSweep => field::run(params, ctx),
        Task::Esr => esr::run(params),
        Task::EchoFit => echo::run(params, ctx),
        Task::SpinFreezeFit => freeze::run(params, ctx),
        Task::Telegraph => telegraph::run(params, ctx),
        Task::HyperpolSim => hyperpol::simulate(params),
        Task::HyperpolFit => hyperpol::fit(params, ctx),
    }
}

/// Synthetic data set: tables to write, the ground-truth sidecar and the
/// parameter tree of a config that fits the data.
pub struct Synthetic {
    pub tables: Vec<(String, Table)>,
    pub truth: serde_json::Value,
    pub fit_parameters: toml::Table,
}

pub fn generate(task: Task, synthetic: &toml::Table, seed: u64) -> Result<Synthetic, CliError> {
    match task {
        Task::FieldSweep => field::generate(synthetic, seed),
        Task::EchoFit => echo::generate(synthetic, seed),
        Task::SpinFreezeFit => freeze::generate(synthetic, seed),
        Task::HyperpolFit => hyperpol::generate(synthetic, seed),
        other => Err(CliError::schema(
            "task",
            format!("{other} has no synthetic generator; use field-sweep, echo-fit, spin-freeze-fit or hyperpol-fit"),
        )),
    }
}

/// `E_C, E_L, E_J` as `E/h` in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergiesCfg {
    pub e_c: f64,
    pub e_l: f64,
    pub e_j: f64,
}

impl EnergiesCfg {
    pub fn build(&self) -> Result<fluxkit::circuit::CircuitEnergies, CliError> {
        Ok(fluxkit::circuit::CircuitEnergies::new(self.e_c, self.e_l, self.e_j)?)
    }
}

pub fn default_basis() -> usize {
    fluxkit::circuit::DEFAULT_BASIS
}

pub fn to_table<T: Serialize>(value: &T) -> toml::Table {
    match toml::Value::try_from(value).expect("config values serialise") {
        toml::Value::Table(t) => t,
        _ => unreachable!("structs serialise to tables"),
    }
}

/// Standard normal noise stream for synthetic data.
pub fn gaussian(seed: u64) -> impl FnMut() -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = fluxkit::numerics::seeded_rng(seed);
    move || StandardNormal.sample(&mut rng)
}
