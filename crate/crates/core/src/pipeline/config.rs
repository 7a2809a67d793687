//! Declarative run configuration loaded from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genclient::ServiceSpec;
use crate::render::{CameraSampling, CannyParams, Shading};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetPaths {
    pub body_model: PathBuf,
    pub pose_bank: PathBuf,
    pub priors: PathBuf,
    pub decoder: PathBuf,
    /// Built-in taxonomy when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taxonomy: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_settings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sceneries: Option<PathBuf>,
    #[serde(default = "default_holdout")]
    pub holdout_families: Vec<String>,
}

fn default_holdout() -> Vec<String> {
    crate::taxonomy::DEFAULT_HOLDOUT_FAMILIES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSettings {
    /// The run fails when more than this fraction of samples fail.
    pub failure_threshold: f64,
    /// Worker threads; 0 picks the number of CPUs.
    pub workers: usize,
    pub max_prompt_chars: usize,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        Self {
            failure_threshold: 0.05,
            workers: 0,
            max_prompt_chars: crate::prompt::DEFAULT_MAX_PROMPT_CHARS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlStrengths {
    /// Used for each control when both are sent.
    pub combined: f64,
    /// Used when only one control is sent.
    pub single: f64,
}

impl Default for ControlStrengths {
    fn default() -> Self {
        Self { combined: 0.55, single: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablations {
    pub no_depth: bool,
    pub no_canny: bool,
    pub no_caption: bool,
    pub no_llm: bool,
}

/// How lists are partitioned between train and test generation runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSettings {
    pub seed: u64,
    pub test_pose_fraction: f64,
    pub test_camera_fraction: f64,
    pub test_scenery_fraction: f64,
}

impl Default for PartitionSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            test_pose_fraction: 0.2,
            test_camera_fraction: 0.2,
            test_scenery_fraction: 0.2,
        }
    }
}

fn stub_service() -> ServiceSpec {
    ServiceSpec::Stub
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub assets: AssetPaths,
    #[serde(default)]
    pub generation: GenerationSettings,
    #[serde(default)]
    pub camera: CameraSampling,
    #[serde(default)]
    pub shading: Shading,
    #[serde(default)]
    pub canny: CannyParams,
    #[serde(default)]
    pub controls: ControlStrengths,
    #[serde(default)]
    pub ablations: Ablations,
    #[serde(default = "stub_service")]
    pub backend: ServiceSpec,
    #[serde(default = "stub_service")]
    pub chat: ServiceSpec,
    #[serde(default)]
    pub partition: PartitionSettings,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative asset paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let a = &mut self.assets;
        fix(&mut a.body_model);
        fix(&mut a.pose_bank);
        fix(&mut a.priors);
        fix(&mut a.decoder);
        for p in [&mut a.taxonomy, &mut a.camera_settings, &mut a.sceneries].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.generation;
        if !(0.0..=1.0).contains(&g.failure_threshold) {
            return Err(Error::Config(format!("failure_threshold {} outside [0, 1]", g.failure_threshold)));
        }
        if g.max_prompt_chars == 0 {
            return Err(Error::Config("max_prompt_chars must be positive".into()));
        }
        self.camera.validate()?;
        let c = &self.controls;
        for (name, v) in [("combined", c.combined), ("single", c.single)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("control strength {name}={v} outside (0, 1]")));
            }
        }
        if !(self.canny.low > 0.0 && self.canny.low < self.canny.high && self.canny.high <= 1.0) {
            return Err(Error::Config(format!("invalid canny thresholds {:?}", self.canny)));
        }
        let p = &self.partition;
        for (name, v) in [
            ("test_pose_fraction", p.test_pose_fraction),
            ("test_camera_fraction", p.test_camera_fraction),
            ("test_scenery_fraction", p.test_scenery_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name}={v} outside (0, 1)")));
            }
        }
        Ok(())
    }

    /// Strength per control kind, `None` when the control is ablated.
    pub fn control_strengths(&self) -> (Option<f64>, Option<f64>) {
        let a = self.ablations;
        match (!a.no_depth, !a.no_canny) {
            (true, true) => (Some(self.controls.combined), Some(self.controls.combined)),
            (true, false) => (Some(self.controls.single), None),
            (false, true) => (None, Some(self.controls.single)),
            (false, false) => (None, None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[assets]
body_model = "body.zsb"
pose_bank = "poses.jsonl"
priors = "priors.json"
decoder = "decoder.json"
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = Config::parse(MINIMAL).unwrap();
        assert_eq!(cfg.camera.image_size, 1024);
        assert_eq!(cfg.assets.holdout_families, vec!["Felidae".to_string()]);
        assert_eq!(cfg.backend, ServiceSpec::Stub);
        assert_eq!(cfg.control_strengths(), (Some(0.55), Some(0.55)));
    }

    #[test]
    fn single_control_gets_single_strength() {
        let mut cfg = Config::parse(MINIMAL).unwrap();
        cfg.ablations.no_canny = true;
        assert_eq!(cfg.control_strengths(), (Some(0.9), None));
    }

    #[test]
    fn unknown_field_is_config_error() {
        let text = format!("{MINIMAL}\n[generation]\nbogus = 1\n");
        assert!(matches!(Config::parse(&text), Err(Error::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = Config::parse(MINIMAL).unwrap();
        assert_eq!(Config::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut cfg = Config::parse(MINIMAL).unwrap();
        cfg.resolve_paths(Path::new("/data/run"));
        assert_eq!(cfg.assets.body_model, PathBuf::from("/data/run/body.zsb"));
    }
}
