//! Batch driver for the fluxkit models.
//!
//! A run is described by one TOML document:
//!
//! ```toml
//! task = "spectrum"
//! seed = 7            # optional
//! [output]
//! dir = "out"         # optional, defaults to the task name
//! [parameters]
//! energies = { e_c = 14.1, e_l = 0.454, e_j = 32.2 }
//! ```
//!
//! `run` writes CSV tables and `report.json` into the output directory.
//! `gen` reads a `[synthetic]` table instead, writes a synthetic data set,
//! `truth.json` and a `fit.toml` that `run` accepts as is.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

pub mod config;
mod error;
pub mod report;
pub mod table;
mod tasks;

pub use config::{RunConfig, Task, DEFAULT_SEED, OUTPUT_ROOT_ENV};
pub use error::CliError;
pub use report::{Convergence, Quantity, Report};

pub const REPORT_FILE: &str = "report.json";
pub const TRUTH_FILE: &str = "truth.json";
pub const FIT_CONFIG_FILE: &str = "fit.toml";

#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub report: Report,
}

#[derive(Debug)]
pub struct GenSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
}

fn prepare(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Executes the task named in the config at `path`.
pub fn run(path: &Path) -> Result<RunSummary, CliError> {
    let loaded = config::load(path)?;
    let mut ctx = config::Context::new(&loaded);
    let out = tasks::run(loaded.config.task, &loaded.config.parameters, &mut ctx)?;

    let dir = config::output_dir(&loaded);
    prepare(&dir)?;
    let mut artifacts = Vec::new();
    for (name, table) in &out.tables {
        table.write(&dir.join(name))?;
        artifacts.push(name.clone());
    }
    let report = Report {
        task: loaded.config.task,
        seed: loaded.config.seed,
        input_digest: ctx.digest(),
        parameters: out.parameters,
        convergence: out.convergence,
        warnings: out.warnings,
        artifacts,
    };
    let mut json = serde_json::to_vec_pretty(&report).expect("report serialises");
    json.push(b'\n');
    write(&dir.join(REPORT_FILE), &json)?;
    Ok(RunSummary { output_dir: dir, report })
}

/// Writes a synthetic data set for the fit task named in the config at `path`.
pub fn generate(path: &Path) -> Result<GenSummary, CliError> {
    let loaded = config::load(path)?;
    let cfg = &loaded.config;
    let synthetic = cfg
        .synthetic
        .as_ref()
        .ok_or_else(|| CliError::schema(".", "missing field `synthetic`"))?;
    let data = tasks::generate(cfg.task, synthetic, cfg.seed)?;

    let dir = config::output_dir(&loaded);
    prepare(&dir)?;
    let mut files = Vec::new();
    for (name, table) in &data.tables {
        table.write(&dir.join(name))?;
        files.push(name.clone());
    }
    let sidecar = serde_json::json!({ "task": cfg.task, "truth": data.truth });
    let mut json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serialises");
    json.push(b'\n');
    write(&dir.join(TRUTH_FILE), &json)?;
    files.push(TRUTH_FILE.into());

    let fit = RunConfig {
        task: cfg.task,
        seed: cfg.seed,
        output: config::OutputConfig { dir: Some(PathBuf::from("fit")) },
        parameters: data.fit_parameters,
        synthetic: None,
    };
    let text = toml::to_string(&fit).map_err(|e| CliError::Invalid(e.to_string()))?;
    write(&dir.join(FIT_CONFIG_FILE), text.as_bytes())?;
    files.push(FIT_CONFIG_FILE.into());
    Ok(GenSummary { output_dir: dir, files })
}
