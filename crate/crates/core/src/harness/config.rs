use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::SweepSpec;
use crate::error::{Error, Result};
use crate::model::ProblemInstance;

/// Name of the built-in instance with the simulation defaults.
pub const PRESET_PAPER_DEFAULT: &str = "paper-default";

/// JSON configuration for the CLI. `instance` wins over `preset`; with
/// neither, the default preset is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<ProblemInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_epsilon() -> f64 {
    1e-3
}

impl Default for Config {
    fn default() -> Self {
        Self {
            preset: None,
            instance: None,
            sweep: None,
            epsilon: default_epsilon(),
            seed: 0,
        }
    }
}

/// Instance registered under `name`.
pub fn preset(name: &str) -> Result<ProblemInstance> {
    match name {
        PRESET_PAPER_DEFAULT => Ok(ProblemInstance::paper_default()),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; available: {PRESET_PAPER_DEFAULT}"
        ))),
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.1) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 0.1], got {}",
                self.epsilon
            )));
        }
        if let Some(p) = &self.preset {
            preset(p)?;
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    /// The instance this configuration describes.
    pub fn instance(&self) -> Result<ProblemInstance> {
        match (&self.instance, &self.preset) {
            (Some(inst), _) => Ok(inst.clone()),
            (None, Some(p)) => preset(p),
            (None, None) => preset(PRESET_PAPER_DEFAULT),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_to_preset() {
        let cfg = Config::from_json("{}").unwrap();
        assert_eq!(cfg.instance().unwrap(), ProblemInstance::paper_default());
        assert_eq!(cfg.epsilon, 1e-3);
    }

    #[test]
    fn explicit_instance_and_sweep() {
        let text = r#"{
            "instance": {"gamma": [9000, 12000], "C_bits": 2e7, "beta_s_sec": 2,
                         "bandwidth_hz": 1e5, "p_max_w": 0.01, "energy_budget_j": 1},
            "sweep": {"param": "beta_s", "values": [1, 2], "schemes": ["proposed", "full_c"], "seed": 3},
            "epsilon": 0.01,
            "seed": 3
        }"#;
        let cfg = Config::from_json(text).unwrap();
        assert_eq!(cfg.instance().unwrap().num_uavs(), 2);
        assert_eq!(cfg.sweep.unwrap().values, vec![1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Config::from_json(r#"{"preset": "nope"}"#).is_err());
        assert!(Config::from_json(r#"{"epsilon": 0.5}"#).is_err());
        assert!(Config::from_json(r#"{"unknown": 1}"#).is_err());
        assert!(Config::from_json(r#"{"sweep": {"param": "beta_s", "values": []}}"#).is_err());
    }
}
