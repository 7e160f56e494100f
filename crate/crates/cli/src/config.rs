//! Experiment configuration: strict JSON schema, unknown keys rejected so
//! that a config file can never silently drift from what actually ran.

use anyhow::{bail, Context, Result};
use noarb_core::TimeGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub horizon: f64,
    pub steps: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.steps).context("invalid grid")
    }
}

/// Experiment-specific knobs; all optional, with per-experiment defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    /// minimum holding period / rebalancing interval
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trees: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacings: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(json).context("config does not match the schema")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.confidence {
            if !(0.5..1.0).contains(&c) {
                bail!("confidence {c} must lie in [0.5, 1)");
            }
        }
        if let Some(g) = &self.grid {
            g.build()?;
        }
        if self.paths == Some(0) {
            bail!("paths must be positive");
        }
        Ok(())
    }

    pub fn grid_or(&self, horizon: f64, steps: usize) -> Result<TimeGrid> {
        match &self.grid {
            Some(g) => g.build(),
            None => TimeGrid::new(horizon, steps).context("invalid default grid"),
        }
    }

    pub fn paths_or(&self, default: usize) -> usize {
        self.paths.unwrap_or(default)
    }

    pub fn confidence_or_default(&self) -> f64 {
        self.confidence.unwrap_or(0.999)
    }
}
