//! TOML experiment configuration. Unknown keys are rejected.
//!
//! ```toml
//! output_dir = "runs/heat"
//! seeds = [0, 1, 2]
//!
//! [model]
//! hidden_widths = [32]
//! activation = "tanh"
//!
//! [train]
//! epsilon = 1e-10
//! max_iterations = 2000
//! strategy = { kind = "adaptive" }
//!
//! [[problems]]
//! name = "heat"
//! grid = { counts = [32, 32], boundary = 32 }
//! ```

use std::path::{Path, PathBuf};

use anagram_core::autodiff::Activation;
use anagram_core::optimizer::TrainConfig;
use anagram_core::problems::{GridSpec, PROBLEM_NAMES};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// `error`, `warn`, `info`, `debug` or `trace`.
    #[serde(default)]
    pub log_level: Option<String>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub plots: PlotConfig,
    pub problems: Vec<ProblemConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_widths: vec![32],
            activation: Activation::Tanh,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlotConfig {
    pub enabled: bool,
    /// Iterations to draw RCE snapshots for; negative values count from
    /// the end (`-1` is the last recorded iteration).
    pub rce_iterations: Vec<i64>,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            rce_iterations: vec![0, -1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    /// Defaults to the problem's standard grid.
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

impl ProblemConfig {
    pub fn grid_spec(&self) -> anagram_core::Result<GridSpec> {
        match &self.grid {
            Some(g) => Ok(g.clone()),
            None => GridSpec::default_for(&self.name),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(ConfigError("seeds: at least one seed is required".into()));
        }
        if self.problems.is_empty() {
            return Err(ConfigError("problems: at least one problem is required".into()));
        }
        for (i, p) in self.problems.iter().enumerate() {
            if !PROBLEM_NAMES.contains(&p.name.as_str()) {
                return Err(ConfigError(format!(
                    "problems[{i}].name: unknown problem `{}`; valid names are: {}",
                    p.name,
                    PROBLEM_NAMES.join(", ")
                )));
            }
            p.grid_spec()
                .and_then(|g| anagram_core::problems::build_problem(&p.name, &g).map(|_| ()))
                .map_err(|e| ConfigError(format!("problems[{i}].grid: {e}")))?;
        }
        if self.model.hidden_widths.is_empty() || self.model.hidden_widths.contains(&0) {
            return Err(ConfigError(
                "model.hidden_widths: need at least one layer of positive width".into(),
            ));
        }
        self.train
            .validate()
            .map_err(|e| ConfigError(format!("train: {e}")))?;
        if let Some(level) = &self.log_level {
            if level.parse::<log::LevelFilter>().is_err() {
                return Err(ConfigError(format!("log_level: unknown level `{level}`")));
            }
        }
        Ok(())
    }
}
