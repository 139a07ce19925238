//! Experiment configuration (TOML).
//!
//! ```toml
//! [[problem]]
//! generator = "quadratic"
//! clients = 4
//! dim = 5
//! mu = 1.0
//! smoothness = 10.0
//!
//! [[topology]]
//! kind = "ring"
//!
//! [[algorithm]]
//! name = "acc-ga-msgd"
//! inner_steps = 20
//! dual_step = "auto"
//!
//! [budget]
//! max_rounds = 200
//!
//! [run]
//! seeds = [0, 1, 2]
//!
//! [output]
//! csv = "metrics.csv"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A numeric parameter that may be left to the default table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Number(f64),
    Text(String),
}

impl Default for Param {
    fn default() -> Self {
        Param::Text("auto".into())
    }
}

impl Param {
    /// `None` for `"auto"`, the number otherwise.
    pub fn resolve(&self, field: &str) -> Result<Option<f64>> {
        match self {
            Param::Number(v) if v.is_finite() => Ok(Some(*v)),
            Param::Number(v) => Err(Error::config(field, format!("{v} is not finite"))),
            Param::Text(t) if t == "auto" => Ok(None),
            Param::Text(t) => Err(Error::config(field, format!("expected \"auto\" or a number, got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Quadratic,
    IdenticalQuadratic,
    Logistic,
    Nonconvex,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: Option<String>,
    pub generator: Generator,
    pub seed: Option<u64>,
    pub clients: Option<usize>,
    pub dim: Option<usize>,
    pub mu: Option<f64>,
    pub smoothness: Option<f64>,
    pub heterogeneity: Option<f64>,
    pub samples: Option<usize>,
    pub l2: Option<f64>,
    pub penalty: Option<f64>,
    pub sigma: Option<f64>,
    /// Problem file for `generator = "file"`.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyChoice {
    Complete,
    Ring,
    Path,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub name: Option<String>,
    pub kind: TopologyChoice,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    GaMsgd,
    AccGaMsgd,
    Led,
    CentralizedAcc,
    Fedavg,
    Catalyst,
}

impl AlgorithmName {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmName::GaMsgd => "ga-msgd",
            AlgorithmName::AccGaMsgd => "acc-ga-msgd",
            AlgorithmName::Led => "led",
            AlgorithmName::CentralizedAcc => "centralized-acc",
            AlgorithmName::Fedavg => "fedavg",
            AlgorithmName::Catalyst => "catalyst",
        }
    }
}

fn default_inner_steps() -> Param {
    Param::Number(10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub name: AlgorithmName,
    pub label: Option<String>,
    /// Local steps `K` per round, or `"exact"`.
    #[serde(default = "default_inner_steps")]
    pub inner_steps: Param,
    #[serde(default)]
    pub inner_step: Param,
    #[serde(default)]
    pub dual_step: Param,
    #[serde(default)]
    pub momentum: Param,
    /// `paper_l`, `optimality_mu` or `zero` (GA-MSGD).
    pub dual_init: Option<String>,
    /// Catalyst inner method.
    pub inner: Option<AlgorithmName>,
    pub outer: Option<usize>,
    /// Catalyst mode: `auto`, `strongly_convex`, `convex` or `nonconvex`.
    pub mode: Option<String>,
    /// Catalyst layout: `centralized` or `decentralized`.
    pub layout: Option<String>,
    pub gamma: Option<f64>,
    #[serde(default)]
    pub delta0: Param,
    pub max_inner_rounds: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
    /// Caps rounds at `max_samples / K` for sampling methods.
    pub max_samples: Option<usize>,
}

fn default_rounds() -> usize {
    100
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self { max_rounds: default_rounds(), max_samples: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Option<Vec<u64>>,
    /// Used with `base_seed` when `seeds` is absent.
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seeds: None, repetitions: 1, base_seed: 0, parallel: true }
    }
}

impl RunConfig {
    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.repetitions as u64).map(|k| self.base_seed + k).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: Vec<ProblemConfig>,
    #[serde(default)]
    pub topology: Vec<TopologyConfig>,
    #[serde(default)]
    pub algorithm: Vec<AlgorithmConfig>,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
