//! Test-time strategies layered over any policy: the untrapping helper,
//! dynamic goal selection and the stair remapping mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::LongTermGoal;
use crate::world::Action;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnhancementConfig {
    pub untrap: bool,
    pub dynamic_goal: bool,
    pub remap: bool,
    /// Free range ahead (m) below which a step counts as blocked.
    pub tau_coll: f64,
    pub tau_block: u32,
    /// Must match the policy's goal update frequency.
    pub f_update: usize,
    pub tau_unreachable: f64,
    pub tau_reached: f64,
    pub stair_dwell_threshold: u32,
}

impl Default for EnhancementConfig {
    fn default() -> Self {
        Self {
            untrap: false,
            dynamic_goal: false,
            remap: false,
            tau_coll: 0.20,
            tau_block: 4,
            f_update: 25,
            tau_unreachable: 12.0,
            tau_reached: 0.5,
            stair_dwell_threshold: 15,
        }
    }
}

impl EnhancementConfig {
    pub fn all_enabled() -> Self {
        Self { untrap: true, dynamic_goal: true, remap: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_coll > 0.0) {
            return Err(Error::NonPositive("tau_coll"));
        }
        if self.tau_block == 0 {
            return Err(Error::NonPositive("tau_block"));
        }
        if self.f_update == 0 {
            return Err(Error::NonPositive("f_update"));
        }
        if self.stair_dwell_threshold == 0 {
            return Err(Error::NonPositive("stair_dwell_threshold"));
        }
        if !(self.tau_reached > 0.0 && self.tau_reached < self.tau_unreachable) {
            return Err(Error::Config("need 0 < tau_reached < tau_unreachable".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UntrapPhase {
    Inactive,
    Turning,
    Advancing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnParity {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancementState {
    pub blocked_count: u32,
    pub untrap_phase: UntrapPhase,
    /// Turn direction of the current (or next) activation. Flips when an
    /// activation ends.
    pub turn_parity: TurnParity,
    pub goal_collector: Option<LongTermGoal>,
    pub current_goal: Option<LongTermGoal>,
    pub stair_dwell: u32,
}

impl Default for EnhancementState {
    fn default() -> Self {
        Self {
            blocked_count: 0,
            untrap_phase: UntrapPhase::Inactive,
            turn_parity: TurnParity::Left,
            goal_collector: None,
            current_goal: None,
            stair_dwell: 0,
        }
    }
}

/// Untrapping helper. Returns the action that replaces the planner's
/// choice, if any. An activation lasts from the blocked count reaching
/// `tau_block` until [`record_motion`] sees a clean Forward; all of its
/// turns go the same way and consecutive activations alternate.
pub fn untrap_step(
    prev_action: Option<Action>,
    obstacle_distance: f64,
    state: &mut EnhancementState,
    config: &EnhancementConfig,
) -> Option<Action> {
    if obstacle_distance < config.tau_coll {
        state.blocked_count += 1;
    }
    if state.blocked_count < config.tau_block {
        state.untrap_phase = UntrapPhase::Inactive;
        return None;
    }
    if prev_action == Some(Action::Forward) {
        state.untrap_phase = UntrapPhase::Turning;
        Some(match state.turn_parity {
            TurnParity::Left => Action::TurnLeft,
            TurnParity::Right => Action::TurnRight,
        })
    } else {
        state.untrap_phase = UntrapPhase::Advancing;
        Some(Action::Forward)
    }
}

/// Feeds back the executed action: a Forward that completed without a
/// collision ends the blocked streak and with it any activation.
pub fn record_motion(state: &mut EnhancementState, action: Action, collided: bool) {
    if action == Action::Forward && !collided {
        if state.untrap_phase != UntrapPhase::Inactive {
            state.turn_parity = match state.turn_parity {
                TurnParity::Left => TurnParity::Right,
                TurnParity::Right => TurnParity::Left,
            };
        }
        state.blocked_count = 0;
        state.untrap_phase = UntrapPhase::Inactive;
    }
}

/// Dynamic goal selection. `prediction` is the policy output for this
/// step (needed when `step % f_update == 0`); `d_goal` the planner's
/// distance to the current goal.
pub fn dynamic_goal_select(
    step: usize,
    prediction: Option<LongTermGoal>,
    d_goal: f64,
    state: &mut EnhancementState,
    config: &EnhancementConfig,
) -> Result<LongTermGoal> {
    if step % config.f_update == 0 {
        if let Some(p) = prediction {
            state.goal_collector = Some(p);
        }
    }
    let collector = state.goal_collector.ok_or(Error::MissingInitialGoal)?;
    if state.current_goal.is_none() || d_goal > config.tau_unreachable || d_goal < config.tau_reached {
        state.current_goal = Some(collector);
    }
    state.current_goal.ok_or(Error::MissingInitialGoal)
}

/// Remapping mask: `true` exactly when the agent has stood on stairs for
/// `stair_dwell_threshold` consecutive steps (the counter then restarts).
pub fn remap_check(on_stairs: bool, state: &mut EnhancementState, config: &EnhancementConfig) -> bool {
    if !on_stairs {
        state.stair_dwell = 0;
        return false;
    }
    state.stair_dwell += 1;
    if state.stair_dwell >= config.stair_dwell_threshold {
        state.stair_dwell = 0;
        return true;
    }
    false
}
