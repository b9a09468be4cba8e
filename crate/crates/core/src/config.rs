//! Experiment configuration and seed derivation.
//!
//! Every random stream of a run is derived from the master seed as
//! `derive_seed(master, name)` (see [`crate::rng`]), with these names:
//!
//! | name              | stream                                   |
//! |-------------------|------------------------------------------|
//! | `world/train/<i>` | hazard layout of training world `i`      |
//! | `world/test`      | hazard layout of the test-split world    |
//! | `world/eval`      | hazard layout of the closed-loop world   |
//! | `dataset`         | augmentation draws and the split shuffle |
//! | `init/<case>`     | weight initialization (`case1`..`case3`) |
//! | `train/<case>`    | batch order and dropout masks            |

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{LayerSchedule, TrainConfig};
use crate::rng::{derive_seed, Rng};
use crate::threat::ThreatConfig;
use crate::vision::{CameraRig, DatasetConfig};
use crate::world::{ExpertPolicy, HazardConfig, HazardPlacement, WorldConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Length of each closed-loop drive.
    pub rollout_ms: u64,
    /// Comparison window around each nearest approach to a hazard.
    pub window_before_ms: u64,
    pub window_after_ms: u64,
    pub alpha: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            rollout_ms: 60_000,
            window_before_ms: 5_000,
            window_after_ms: 5_000,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Template of the training worlds; its own seed field is ignored.
    pub world: WorldConfig,
    pub train_worlds: usize,
    /// Hazards of the world that supplies the test split.
    pub test_hazards: HazardConfig,
    /// Hazards of the closed-loop evaluation world.
    pub eval_hazards: HazardConfig,
    pub camera: CameraRig,
    pub threat: ThreatConfig,
    pub expert: ExpertPolicy,
    pub dataset: DatasetConfig,
    /// Defaults to the desk schedule for the camera frame size.
    pub schedule: Option<LayerSchedule>,
    pub train: TrainConfig,
    /// Add left/right frames as extra training rows with a steering correction.
    pub side_rows: bool,
    pub side_correction: f64,
    pub eval: EvalConfig,
    pub out_dir: Option<PathBuf>,
}

fn lane_center_hazards() -> HazardConfig {
    HazardConfig {
        placement: HazardPlacement::DrivingLaneCenter,
        lateral_jitter_m: 0.0,
        ..Default::default()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            world: WorldConfig::default(),
            train_worlds: 3,
            test_hazards: lane_center_hazards(),
            eval_hazards: lane_center_hazards(),
            camera: CameraRig::default(),
            threat: ThreatConfig::default(),
            expert: ExpertPolicy::default(),
            dataset: DatasetConfig::default(),
            schedule: None,
            train: TrainConfig::default(),
            side_rows: true,
            side_correction: 0.08,
            eval: EvalConfig::default(),
            out_dir: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid config:\n  - {}", .violations.join("\n  - "))]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl ExperimentConfig {
    pub fn seed_for(&self, name: &str) -> u64 {
        derive_seed(self.seed, name)
    }

    pub fn rng_for(&self, name: &str) -> Rng {
        Rng::new(self.seed_for(name))
    }

    pub fn effective_schedule(&self) -> LayerSchedule {
        self.schedule
            .clone()
            .unwrap_or_else(|| LayerSchedule::desk(self.camera.height_px, self.camera.width_px))
    }

    pub fn with_frames(mut self, height: usize, width: usize) -> Self {
        self.camera.height_px = height;
        self.camera.width_px = width;
        self
    }

    /// World configs with their derived seeds: training worlds, test world, evaluation world.
    pub fn worlds(&self) -> (Vec<WorldConfig>, WorldConfig, WorldConfig) {
        let train = (0..self.train_worlds)
            .map(|i| WorldConfig {
                seed: self.seed_for(&format!("world/train/{i}")),
                ..self.world.clone()
            })
            .collect();
        let test = WorldConfig {
            hazards: self.test_hazards.clone(),
            seed: self.seed_for("world/test"),
            ..self.world.clone()
        };
        let eval = WorldConfig {
            hazards: self.eval_hazards.clone(),
            seed: self.seed_for("world/eval"),
            ..self.world.clone()
        };
        (train, test, eval)
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        if let Err(e) = self.world.road.validate() {
            v.push(format!("world.road: {e}"));
        }
        if self.world.dt_ms == 0 {
            v.push("world.dt_ms must be > 0".to_string());
        }
        if !(self.world.vehicle.speed_mps >= 0.0) {
            v.push("world.vehicle.speed_mps must be >= 0".to_string());
        }
        if !(self.world.vehicle.wheelbase_m > 0.0) {
            v.push("world.vehicle.wheelbase_m must be > 0".to_string());
        }
        if self.train_worlds == 0 {
            v.push("train_worlds must be > 0".to_string());
        }
        for (name, h) in [
            ("world.hazards", &self.world.hazards),
            ("test_hazards", &self.test_hazards),
            ("eval_hazards", &self.eval_hazards),
        ] {
            if !(h.min_spacing_m >= 0.0) {
                v.push(format!("{name}.min_spacing_m must be >= 0"));
            }
            if !(h.lateral_jitter_m >= 0.0) {
                v.push(format!("{name}.lateral_jitter_m must be >= 0"));
            }
        }
        if self.dataset.test_collect > 0 && self.test_hazards.count == 0 {
            v.push("test_hazards.count must be > 0 when dataset.test_collect > 0".to_string());
        }
        if let Err(e) = self.camera.validate() {
            v.push(format!("camera: {e}"));
        }
        if let Err(e) = self.threat.validate() {
            v.push(format!("threat: {e}"));
        }
        if let Err(e) = self.dataset.validate(self.world.dt_ms) {
            v.push(e);
        }
        if let Err(e) = self.train.validate() {
            v.push(e);
        }
        let schedule = self.effective_schedule();
        if let Err(e) = schedule.validate() {
            v.push(format!("schedule: {e}"));
        }
        let h = self.camera.height_px;
        if schedule.input_height + schedule.crop_top != h || schedule.input_width != self.camera.width_px {
            v.push(format!(
                "schedule input {}x{} (after cropping {} rows) does not match {}x{} camera frames",
                schedule.input_height, schedule.input_width, schedule.crop_top, h, self.camera.width_px
            ));
        }
        if schedule.crop_top != h / 2 {
            v.push(format!("schedule.crop_top must be half the frame height ({})", h / 2));
        }
        if !(0.0..=0.5).contains(&self.side_correction) {
            v.push("side_correction must lie in [0, 0.5]".to_string());
        }
        if self.side_rows && !self.dataset.side_frames {
            v.push("side_rows requires dataset.side_frames".to_string());
        }
        let dt = self.world.dt_ms.max(1);
        if self.eval.rollout_ms == 0 || self.eval.rollout_ms % dt != 0 {
            v.push(format!("eval.rollout_ms must be a positive multiple of dt_ms {dt}"));
        }
        if !(self.eval.alpha > 0.0 && self.eval.alpha < 1.0) {
            v.push("eval.alpha must lie in (0, 1)".to_string());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations: v })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn every_violation_is_listed() {
        let mut c = ExperimentConfig::default();
        c.train.learning_rate = -1.0;
        c.train_worlds = 0;
        c.threat.l_x_max_cm = 0.0;
        c.eval.alpha = 2.0;
        let err = c.validate().unwrap_err();
        assert_eq!(err.violations.len(), 4, "{err}");
    }

    #[test]
    fn seeds_depend_on_master_and_name() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            seed: 8,
            ..Default::default()
        };
        assert_ne!(a.seed_for("dataset"), b.seed_for("dataset"));
        assert_ne!(a.seed_for("dataset"), a.seed_for("world/test"));
        assert_eq!(a.seed_for("dataset"), derive_seed(7, "dataset"));
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"seed": 3}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.train, TrainConfig::default());
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
