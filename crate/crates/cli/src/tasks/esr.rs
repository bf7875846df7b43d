//! Spin-resonance fields, thermal populations and misalignment compensation.

use fluxkit::field::{
    compensation_field, esr_field, temperature_from_population, thermal_population, EsrModel,
};
use serde::Deserialize;

use super::TaskOutput;
use crate::config::section;
use crate::error::CliError;
use crate::report::Quantity;
use crate::table::Table;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    /// Qubit frequencies, GHz.
    frequencies: Vec<f64>,
    #[serde(default = "default_g")]
    g_factor: f64,
    #[serde(default = "default_spin")]
    spin: f64,
    /// Bath temperatures, K; tabulated against every frequency.
    #[serde(default)]
    temperatures: Vec<f64>,
    /// Measured excited populations, one per frequency.
    #[serde(default)]
    populations: Vec<f64>,
    compensation: Option<Compensation>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Compensation {
    /// In-plane field, T.
    b_parallel: f64,
    /// Out-of-plane tilt, T/T.
    misalignment: f64,
}

fn default_g() -> f64 {
    EsrModel::default().g_factor
}

fn default_spin() -> f64 {
    EsrModel::default().spin
}

pub fn run(params: &toml::Table) -> Result<TaskOutput, CliError> {
    let p: Params = section("parameters", params)?;
    if p.frequencies.is_empty() {
        return Err(CliError::schema("parameters.frequencies", "need at least one frequency"));
    }
    if !p.populations.is_empty() && p.populations.len() != p.frequencies.len() {
        return Err(CliError::schema(
            "parameters.populations",
            format!("expected {} values, one per frequency", p.frequencies.len()),
        ));
    }
    let model = EsrModel { g_factor: p.g_factor, spin: p.spin };
    let mut out = TaskOutput::default();

    let mut t = Table::new(&["f_q_ghz", "b_esr_t"]);
    for &f in &p.frequencies {
        t.push(&[f, esr_field(f, &model)?]);
    }
    out.table("esr.csv", t);
    if let [f] = p.frequencies.as_slice() {
        out.set("esr_field", Quantity::new(esr_field(*f, &model)?, "T"));
    }

    if !p.temperatures.is_empty() {
        let mut t = Table::new(&["f_q_ghz", "temperature_k", "p_excited"]);
        for &f in &p.frequencies {
            for &temp in &p.temperatures {
                t.push(&[f, temp, thermal_population(f, temp)?]);
            }
        }
        out.table("thermal_population.csv", t);
    }
    if !p.populations.is_empty() {
        let mut t = Table::new(&["f_q_ghz", "p_excited", "temperature_k"]);
        for (&f, &pop) in p.frequencies.iter().zip(&p.populations) {
            t.push(&[f, pop, temperature_from_population(f, pop)?]);
        }
        out.table("effective_temperature.csv", t);
    }
    if let Some(c) = &p.compensation {
        out.set("compensation_field", Quantity::new(compensation_field(c.b_parallel, c.misalignment), "T"));
    }
    Ok(out)
}
