use serde::{Deserialize, Serialize};

use crate::enhance::EnhancementConfig;
use crate::error::{Error, Result};
use crate::perception::{AugmentConfig, DetectorModel};
use crate::policy::{PlannerConfig, PolicyConfig, RewardConfig};
use crate::world::{MotionParams, SensorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Fixed,
    Dynamic,
    Both,
}

/// Thresholds of the failure-classification cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FailureRules {
    /// Extra distance beyond the success radius still counted as a near miss.
    pub near_miss_slack: f64,
    /// Trailing window (steps) inspected for trapping.
    pub trapped_window: usize,
    /// Helper activations in the window that mark the agent as trapped.
    pub trapped_activations: usize,
    /// Distance travelled in the window below which the agent is stuck.
    pub trapped_displacement: f64,
    pub near_target_distance: f64,
    pub near_target_steps: usize,
    /// A mapped target cell with no true target this close is a map error.
    pub map_error_radius: f64,
}

impl Default for FailureRules {
    fn default() -> Self {
        Self {
            near_miss_slack: 0.25,
            trapped_window: 50,
            trapped_activations: 3,
            trapped_displacement: 0.5,
            near_target_distance: 2.0,
            near_target_steps: 30,
            map_error_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub success_radius: f64,
    pub max_steps_fixed: usize,
    /// Scaling factor of the dynamic step budget.
    pub alpha: f64,
    pub mode: EvalMode,
    /// Count an episode as successful only if the agent chose to stop.
    pub require_stop: bool,
    pub failure: FailureRules,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            success_radius: 1.0,
            max_steps_fixed: 500,
            alpha: 5.0,
            mode: EvalMode::Both,
            require_stop: false,
            failure: FailureRules::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.success_radius > 0.0) {
            return Err(Error::NonPositive("success_radius"));
        }
        if self.max_steps_fixed == 0 {
            return Err(Error::NonPositive("max_steps_fixed"));
        }
        if !(self.alpha >= 1.0) {
            return Err(Error::Config("alpha must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// Side of the egocentric local map, cells.
    pub local_size: usize,
    pub augment: bool,
    pub augment_params: AugmentConfig,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { local_size: 480, augment: true, augment_params: AugmentConfig::default() }
    }
}

/// Every swappable component of the navigation stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pipeline {
    pub detector: DetectorModel,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub enhance: EnhancementConfig,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub motion: MotionParams,
    #[serde(default)]
    pub reward: RewardConfig,
}

impl Pipeline {
    /// Default stack with the given detector.
    pub fn with_detector(detector: DetectorModel) -> Self {
        Self {
            detector,
            map: MapConfig::default(),
            policy: PolicyConfig::default(),
            planner: PlannerConfig::default(),
            enhance: EnhancementConfig::default(),
            sensor: SensorConfig::default(),
            motion: MotionParams::default(),
            reward: RewardConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        self.motion.validate()?;
        self.detector.validate(self.sensor.max_range)?;
        self.policy.validate()?;
        self.planner.validate()?;
        self.enhance.validate()?;
        self.reward.validate()?;
        if self.map.local_size == 0 || self.map.local_size % 2 != 0 {
            return Err(Error::Config(format!("local map size {} must be even", self.map.local_size)));
        }
        if self.enhance.dynamic_goal && self.enhance.f_update != self.policy.goal_update_frequency {
            return Err(Error::Config(format!(
                "enhance.f_update {} differs from policy.goal_update_frequency {}",
                self.enhance.f_update, self.policy.goal_update_frequency
            )));
        }
        Ok(())
    }
}
