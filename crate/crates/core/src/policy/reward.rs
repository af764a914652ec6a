use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardType {
    R1,
    R2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Weight of newly explored area (per square meter).
    pub alpha1: f64,
    /// Weight of progress towards the target (per meter).
    pub alpha2: f64,
    /// Success bonus.
    pub alpha3: f64,
    /// Per-step penalty.
    pub alpha4: f64,
    pub reward_type: RewardType,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { alpha1: 1.0, alpha2: 1.0, alpha3: 2.5, alpha4: 0.001, reward_type: RewardType::R1 }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.alpha1, self.alpha2, self.alpha3, self.alpha4].iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config("reward weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Explored area (m^2) and distance to target (m) at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardState {
    pub area: f64,
    pub distance: f64,
}

pub fn compute_reward(prev: RewardState, curr: RewardState, success: bool, config: &RewardConfig) -> f64 {
    compute_reward_as(prev, curr, success, config, config.reward_type)
}

pub(crate) fn compute_reward_as(
    prev: RewardState,
    curr: RewardState,
    success: bool,
    config: &RewardConfig,
    kind: RewardType,
) -> f64 {
    let exploration = config.alpha1 * (curr.area - prev.area);
    match kind {
        RewardType::R1 => exploration + config.alpha2 * (prev.distance - curr.distance),
        RewardType::R2 => exploration + if success { config.alpha3 } else { 0.0 } - config.alpha4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_r1_is_zero() {
        let s = RewardState { area: 3.0, distance: 2.0 };
        assert_eq!(compute_reward(s, s, false, &RewardConfig::default()), 0.0);
    }

    #[test]
    fn r2_success_bonus_minus_penalty() {
        let s = RewardState { area: 3.0, distance: 2.0 };
        let cfg = RewardConfig { reward_type: RewardType::R2, ..Default::default() };
        assert!((compute_reward(s, s, true, &cfg) - 2.499).abs() < 1e-12);
    }
}
