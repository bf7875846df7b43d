//! Run configuration: one TOML document per run.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Seed used when the config does not give one.
pub const DEFAULT_SEED: u64 = 1_729;

/// Overrides the directory that relative output paths resolve against.
pub const OUTPUT_ROOT_ENV: &str = "FLUXKIT_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    FieldSweep,
    Esr,
    EchoFit,
    SpinFreezeFit,
    Telegraph,
    HyperpolSim,
    HyperpolFit,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::FieldSweep => "field-sweep",
            Task::Esr => "esr",
            Task::EchoFit => "echo-fit",
            Task::SpinFreezeFit => "spin-freeze-fit",
            Task::Telegraph => "telegraph",
            Task::HyperpolSim => "hyperpol-sim",
            Task::HyperpolFit => "hyperpol-fit",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; defaults to the task name.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    /// Task-specific tree, checked by the task itself.
    #[serde(default)]
    pub parameters: toml::Table,
    /// Ground truth, design and noise level for `gen`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<toml::Table>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Parsed config plus where it came from.
pub struct Loaded {
    pub config: RunConfig,
    /// Directory containing the config; relative inputs resolve here.
    pub base: PathBuf,
    raw: Vec<u8>,
}

/// Joins a serde path and, for a missing key, the key itself.
fn error_path(prefix: &str, inner: &str, message: &str) -> String {
    let mut parts: Vec<&str> = [prefix, inner].into_iter().filter(|p| !p.is_empty() && *p != ".").collect();
    let missing = message.strip_prefix("missing field `").and_then(|m| m.split('`').next());
    if let Some(key) = missing {
        parts.push(key);
    }
    if parts.is_empty() {
        ".".to_string()
    } else {
        parts.join(".")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::schema(".", e.to_string().trim_end()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.path().to_string();
        let message = e.into_inner().message().to_string();
        CliError::schema(error_path("", &inner, &message), message)
    })
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let raw = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = std::str::from_utf8(&raw).map_err(|_| CliError::schema(".", "config is not UTF-8"))?;
    let config = parse_config(text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base, raw })
}

/// Checks a sub-tree against `T`, reporting errors as `prefix.path`.
pub fn section<T: DeserializeOwned>(prefix: &str, table: &toml::Table) -> Result<T, CliError> {
    serde_path_to_error::deserialize(toml::Value::Table(table.clone())).map_err(|e| {
        let inner = e.path().to_string();
        let message = e.into_inner().message().to_string();
        CliError::schema(error_path(prefix, &inner, &message), message)
    })
}

/// Execution context handed to tasks: input resolution and the input digest.
pub struct Context {
    pub seed: u64,
    base: PathBuf,
    hasher: Sha256,
}

impl Context {
    pub fn new(loaded: &Loaded) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(&loaded.raw);
        Self { seed: loaded.config.seed, base: loaded.base.clone(), hasher }
    }

    pub fn resolve(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.base.join(rel)
    }

    /// Reads an input file and folds its bytes into the digest.
    pub fn read_input(&mut self, rel: &str) -> Result<Vec<u8>, CliError> {
        let path = self.resolve(rel);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        self.hasher.update((rel.len() as u64).to_le_bytes());
        self.hasher.update(rel.as_bytes());
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(&bytes);
        Ok(bytes)
    }

    pub fn digest(&self) -> String {
        format!("sha256:{}", hex::encode(self.hasher.clone().finalize()))
    }
}

/// Output directory for a run: `output.dir` (default: task name) under the
/// output root if the environment sets one, else under the config directory.
pub fn output_dir(loaded: &Loaded) -> PathBuf {
    let dir = loaded
        .config
        .output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(loaded.config.task.name()));
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(dir),
        _ => loaded.base.join(dir),
    }
}
