//! Scenario JSON: one document with `propagation`, `estimator`, `decision`,
//! `scenario` and `training` sections. Every field is optional and unknown
//! keys are rejected.

use std::path::Path;

use anyhow::{Context, Result};
use handoff_core::{
    DecisionConfig, EstimatorConfig, PropagationParams, ScenarioConfig, TrafficIntensity,
    TrainConfig,
};
use serde::{Deserialize, Serialize};

/// Consulted only when neither `--seed` nor the config file sets a seed.
pub const SEED_ENV: &str = "HANDOFF_SEED";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub propagation: PropagationParams,
    pub estimator: EstimatorConfig,
    pub decision: DecisionConfig,
    pub scenario: ScenarioSection,
    pub training: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub cell_radius_m: f64,
    /// Twice the cell radius when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bs_separation_m: Option<f64>,
    pub sample_step_m: f64,
    pub ti_serving: TrafficIntensity,
    pub ti_target: TrafficIntensity,
    pub n_runs: usize,
    pub master_seed: u64,
    pub smoothing: bool,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let d = ScenarioConfig::default();
        Self {
            cell_radius_m: d.cell_radius_m,
            bs_separation_m: None,
            sample_step_m: d.sample_step_m,
            ti_serving: d.ti_serving,
            ti_target: d.ti_target,
            n_runs: d.n_runs,
            master_seed: d.master_seed,
            smoothing: d.smoothing,
        }
    }
}

/// Parsed file plus which seeds it pinned explicitly.
#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub config: ConfigFile,
    seed_in_file: bool,
}

impl Loaded {
    pub fn from_path(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                Self::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let has = |section: &str, key: &str| raw.get(section).and_then(|s| s.get(key)).is_some();
        let seed_in_file = has("scenario", "master_seed") || has("training", "shuffle_seed");
        let config: ConfigFile = serde_json::from_value(raw)?;
        Ok(Self {
            config,
            seed_in_file,
        })
    }

    /// Applies `--seed`, then the environment fallback, to both seeds.
    pub fn apply_seed(&mut self, flag: Option<u64>, env: Option<&str>) -> Result<()> {
        let seed = match (flag, self.seed_in_file, env) {
            (Some(s), _, _) => Some(s),
            (None, false, Some(v)) => Some(
                v.trim()
                    .parse::<u64>()
                    .with_context(|| format!("{SEED_ENV}={v:?} is not a u64"))?,
            ),
            _ => None,
        };
        if let Some(s) = seed {
            self.config.scenario.master_seed = s;
            self.config.training.shuffle_seed = s;
        }
        Ok(())
    }
}

impl ConfigFile {
    /// Resolves derived defaults so the dump is self-describing.
    pub fn effective(&self) -> Self {
        let mut out = self.clone();
        out.scenario.bs_separation_m = Some(self.separation());
        out
    }

    fn separation(&self) -> f64 {
        self.scenario
            .bs_separation_m
            .unwrap_or(2.0 * self.scenario.cell_radius_m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let s = ScenarioConfig {
            cell_radius_m: self.scenario.cell_radius_m,
            bs_separation_m: self.separation(),
            sample_step_m: self.scenario.sample_step_m,
            ti_serving: self.scenario.ti_serving,
            ti_target: self.scenario.ti_target,
            propagation: self.propagation,
            estimator: self.estimator,
            decision: self.decision,
            n_runs: self.scenario.n_runs,
            master_seed: self.scenario.master_seed,
            smoothing: self.scenario.smoothing,
        };
        s.validate()?;
        Ok(s)
    }
}
