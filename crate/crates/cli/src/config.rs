//! Experiment configuration: a flat TOML document with `[model]`, `[overrides]` and
//! `[sweep]` tables. Every field has a default, so an empty file is a valid LZ run.

use std::path::PathBuf;

use cdkit::lts::{CdOptions, CostOptions, LambdaChoice, DEFAULT_FACTOR_BUDGET};
use cdkit::models::{by_name, ModelParams, ModelSpec, REGISTRY};
use serde::{Deserialize, Deserializer, Serialize};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Cd,
    Aqc,
    Qdrift,
    VerifyBounds,
    Sweep,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Cd => "cd",
            Pipeline::Aqc => "aqc",
            Pipeline::Qdrift => "qdrift",
            Pipeline::VerifyBounds => "verify-bounds",
            Pipeline::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marked: Option<usize>,
    /// Path `[λ_i, λ_f]`; the model default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { name: "landau_zener".into(), n_qubits: None, coupling: None, marked: None, range: None, level: None }
    }
}

impl ModelConfig {
    pub fn build(&self) -> cdkit::Result<ModelSpec> {
        let params = ModelParams { n_qubits: self.n_qubits, coupling: self.coupling, marked: self.marked };
        let mut spec = by_name(&self.name, &params)?;
        if let Some([lo, hi]) = self.range {
            spec = spec.with_range(lo, hi)?;
        }
        if let Some(level) = self.level {
            if level >= spec.hamiltonian.dim() {
                return Err(cdkit::CdError::Domain(format!(
                    "level {level} out of range for dimension {}",
                    spec.hamiltonian.dim()
                )));
            }
            spec.level = level;
        }
        Ok(spec)
    }
}

/// Explicit parameter choices that bypass the selection formulas. Only the fields that are
/// set appear in the manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// AQC evolution time; searched for when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
    /// Constant of the gap-condition evolution time that seeds the AQC time search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_log_base: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_tilde: Option<LambdaChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor_budget: Option<u64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }

    pub fn cd_options(&self) -> CdOptions {
        let base = CostOptions::default();
        CdOptions {
            lambda_choice: self.lambda_tilde.unwrap_or_default(),
            eta: self.eta,
            a: self.a,
            m: self.m,
            r: self.r,
            factor_budget: self.budget(),
            cost: CostOptions {
                constant: self.cost_constant.unwrap_or(base.constant),
                log_base: self.cost_log_base.unwrap_or(base.log_base),
            },
        }
    }

    pub fn budget(&self) -> u64 {
        self.factor_budget.unwrap_or(DEFAULT_FACTOR_BUDGET)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Eps,
    NQubits,
    Coupling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    /// Grid values; ignored for `eps`, which sweeps the top-level `eps` list.
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default = "default_sweep_pipeline")]
    pub pipeline: Pipeline,
}

fn default_sweep_pipeline() -> Pipeline {
    Pipeline::Cd
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Must agree with the subcommand when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<Pipeline>,
    pub model: ModelConfig,
    /// A single value or a list.
    #[serde(deserialize_with = "one_or_many")]
    pub eps: Vec<f64>,
    pub q: usize,
    pub k: usize,
    pub seed: u64,
    /// qDRIFT trajectories per point.
    pub trajectories: usize,
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Also write an SVG of the sweep table.
    pub plot: bool,
    pub overrides: Overrides,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pipeline: None,
            model: ModelConfig::default(),
            eps: vec![0.1],
            q: 2,
            k: 1,
            seed: 0,
            trajectories: 2000,
            workers: 1,
            out_dir: None,
            plot: false,
            overrides: Overrides::default(),
            sweep: None,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

impl ExperimentConfig {
    /// Parses TOML; errors carry the origin plus the parser's line, column and field.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config { origin: origin.into(), message: e.to_string() })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn validate(&self, pipeline: Pipeline) -> Result<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if let Some(p) = self.pipeline {
            if p != pipeline {
                return usage(format!("config pipeline '{}' conflicts with subcommand '{}'", p.name(), pipeline.name()));
            }
        }
        let name = self.model.name.as_str();
        if !REGISTRY.contains(&name) && name != "lz" {
            return usage(format!("unknown model '{name}'; registry: {}", REGISTRY.join(", ")));
        }
        if self.eps.is_empty() {
            return usage("eps grid is empty".into());
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return usage(format!("eps = {e} outside (0, 1]"));
        }
        if self.k == 0 {
            return usage("k must be at least 1".into());
        }
        if self.workers == 0 {
            return usage("workers must be at least 1".into());
        }
        if pipeline == Pipeline::Qdrift && self.trajectories < 2 {
            return usage("qdrift needs at least 2 trajectories".into());
        }
        if let Some(sweep) = &self.sweep {
            if pipeline != Pipeline::Sweep {
                return usage(format!("[sweep] table given to the '{}' subcommand", pipeline.name()));
            }
            if !matches!(sweep.pipeline, Pipeline::Cd | Pipeline::Aqc | Pipeline::Qdrift) {
                return usage(format!("sweep pipeline must be cd, aqc or qdrift, not '{}'", sweep.pipeline.name()));
            }
            match sweep.parameter {
                SweepParameter::Eps => {}
                SweepParameter::NQubits | SweepParameter::Coupling if sweep.values.is_empty() => {
                    return usage("sweep values are empty".into());
                }
                SweepParameter::NQubits | SweepParameter::Coupling if name == "landau_zener" || name == "lz" => {
                    return usage("landau_zener has no size or coupling parameter to sweep".into());
                }
                SweepParameter::Coupling if name != "tfim" => {
                    return usage(format!("coupling sweeps need tfim, not '{name}'"));
                }
                SweepParameter::NQubits => {
                    if let Some(v) = sweep.values.iter().find(|v| !(v.fract() == 0.0 && **v >= 1.0)) {
                        return usage(format!("n_qubits value {v} is not a positive integer"));
                    }
                }
                SweepParameter::Coupling => {}
            }
        }
        Ok(())
    }
}
