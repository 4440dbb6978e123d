//! JSON run configuration with strict schema checking.
//!
//! Unknown keys are rejected so typos fail loudly, and parse errors carry
//! the line and column of the offending token. A parsed config serializes
//! back to an equivalent document (round-trip identity).

use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

/// How boundary and initial conditions enter training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Conditions are built into the ansatz; the loss has no BC/IC terms.
    Hard,
    /// Plain network, penalty terms for every condition, second-order
    /// residual form.
    Soft,
    /// Penalty terms as in `Soft`, but with auxiliary gradient outputs and
    /// the first-order residual system.
    SoftExtraFields,
}

impl Mode {
    pub fn is_soft(self) -> bool {
        !matches!(self, Mode::Hard)
    }

    pub fn extra_fields(self) -> bool {
        matches!(self, Mode::Hard | Mode::SoftExtraFields)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Hard => "hard",
            Mode::Soft => "soft",
            Mode::SoftExtraFields => "soft_extra_fields",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default = "default_main_hidden")]
    pub main_hidden: Vec<usize>,
    #[serde(default = "default_subnet_hidden")]
    pub subnet_hidden: Vec<usize>,
}

fn default_main_hidden() -> Vec<usize> {
    vec![50, 50, 50]
}

fn default_subnet_hidden() -> Vec<usize> {
    vec![20, 20]
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            main_hidden: default_main_hidden(),
            subnet_hidden: default_subnet_hidden(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamSection {
    #[serde(default = "default_adam_iters")]
    pub iters: usize,
    #[serde(default = "default_adam_lr")]
    pub lr: f64,
}

fn default_adam_iters() -> usize {
    5000
}

fn default_adam_lr() -> f64 {
    1e-3
}

impl Default for AdamSection {
    fn default() -> Self {
        AdamSection { iters: default_adam_iters(), lr: default_adam_lr() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LbfgsSection {
    #[serde(default)]
    pub max_iters: usize,
    #[serde(default = "default_lbfgs_memory")]
    pub memory: usize,
}

fn default_lbfgs_memory() -> usize {
    50
}

impl Default for LbfgsSection {
    fn default() -> Self {
        LbfgsSection { max_iters: 0, memory: default_lbfgs_memory() }
    }
}

/// Learning-rate schedule for the Adam phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    /// Reduce-on-plateau decay.
    #[default]
    Plateau,
    /// Fixed rate for the whole Adam phase.
    Constant,
}

fn default_beta_s() -> f64 {
    5.0
}

fn default_beta_t() -> f64 {
    10.0
}

fn default_n_test() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in problem name, e.g. "poisson1d" or "highdim_heat(5)".
    pub problem: String,
    pub mode: Mode,
    #[serde(default)]
    pub network: NetworkSection,
    /// Interior collocation points.
    pub n_f: usize,
    /// Boundary points per condition; soft modes only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
    /// Initial-time points; soft modes on transient problems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_i: Option<usize>,
    #[serde(default = "default_beta_s")]
    pub beta_s: f64,
    #[serde(default = "default_beta_t")]
    pub beta_t: f64,
    #[serde(default)]
    pub adam: AdamSection,
    #[serde(default)]
    pub lr_schedule: LrSchedule,
    #[serde(default)]
    pub lbfgs: LbfgsSection,
    #[serde(default)]
    pub seed: u64,
    /// Test points for the metrics summary.
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    /// Checkpoint cadence in iterations; 0 keeps only the final model.
    #[serde(default)]
    pub checkpoint_every: usize,
    /// Artifact directory; the HARDPINN_OUT_DIR environment variable
    /// overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RunConfig::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Schema-level checks that need no problem instance.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.problem.trim().is_empty() {
            return Err(ConfigError::Invalid("problem name is empty".into()));
        }
        if self.n_f == 0 {
            return Err(ConfigError::Invalid("n_f must be positive".into()));
        }
        if !(self.beta_s > 0.0) || !(self.beta_t > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "beta_s and beta_t must be positive, got {} and {}",
                self.beta_s, self.beta_t
            )));
        }
        if !(self.adam.lr > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "adam.lr must be positive, got {}",
                self.adam.lr
            )));
        }
        match self.mode {
            Mode::Hard => {
                if self.n_b.is_some() || self.n_i.is_some() {
                    return Err(ConfigError::Invalid(
                        "mode=hard takes no boundary or initial points; remove n_b/n_i"
                            .into(),
                    ));
                }
            }
            Mode::Soft | Mode::SoftExtraFields => {
                if self.n_b.unwrap_or(0) == 0 {
                    return Err(ConfigError::Invalid(
                        "soft modes need n_b boundary points per condition".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(mode: &str) -> String {
        let nb = if mode == "hard" { "" } else { ", \"n_b\": 8, \"n_i\": 8" };
        format!("{{\"problem\": \"poisson1d\", \"mode\": \"{mode}\", \"n_f\": 64{nb}}}")
    }

    #[test]
    fn defaults_fill_in_and_round_trip() {
        let cfg = RunConfig::from_json(&minimal("hard")).unwrap();
        assert_eq!(cfg.network.main_hidden, vec![50, 50, 50]);
        assert_eq!(cfg.beta_s, 5.0);
        assert_eq!(cfg.beta_t, 10.0);
        assert_eq!(cfg.adam.iters, 5000);
        assert_eq!(cfg.adam.lr, 1e-3);
        assert_eq!(cfg.lbfgs.memory, 50);
        assert_eq!(cfg.n_test, 512);
        assert_eq!(cfg.seed, 0);
        let again = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn round_trip_preserves_explicit_values() {
        let text = r#"{
            "problem": "schrodinger",
            "mode": "soft_extra_fields",
            "network": {"main_hidden": [32, 32], "subnet_hidden": [8]},
            "n_f": 1000, "n_b": 20, "n_i": 200,
            "beta_s": 2.0, "beta_t": 7.5,
            "adam": {"iters": 123, "lr": 0.01},
            "lbfgs": {"max_iters": 9, "memory": 11},
            "seed": 42, "n_test": 64, "checkpoint_every": 50,
            "out_dir": "scratch"
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let again = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.out_dir.as_deref(), Some("scratch"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = "{\"problem\": \"poisson1d\", \"mode\": \"hard\",\n \"n_f\": 4,\n \"typo_key\": 1}";
        let err = RunConfig::from_json(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("typo_key"), "{msg}");
        assert!(msg.contains("line 3"), "parse errors must be line-anchored: {msg}");
    }

    #[test]
    fn mode_invariants() {
        let err = RunConfig::from_json(
            "{\"problem\": \"poisson1d\", \"mode\": \"hard\", \"n_f\": 4, \"n_b\": 2}",
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_b"), "{err}");

        let err = RunConfig::from_json(
            "{\"problem\": \"poisson1d\", \"mode\": \"soft\", \"n_f\": 4}",
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_b"), "{err}");

        assert!(RunConfig::from_json(&minimal("soft")).is_ok());
        assert!(RunConfig::from_json(&minimal("soft_extra_fields")).is_ok());
    }

    #[test]
    fn mode_helpers() {
        assert!(Mode::Hard.extra_fields());
        assert!(!Mode::Soft.extra_fields());
        assert!(Mode::SoftExtraFields.extra_fields());
        assert!(!Mode::Hard.is_soft());
        assert_eq!(Mode::SoftExtraFields.as_str(), "soft_extra_fields");
    }
}
