use serde::{Deserialize, Serialize};

use super::raycast::{cast, floor_after_moving};
use super::scene::{CellKind, Scene};

/// Maximum range probed for the free distance ahead of the agent.
pub const PROBE_RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub x: f64,
    pub y: f64,
    /// Degrees in `[0, 360)`. 0 points along +x (increasing column),
    /// 90 along +y (increasing row).
    pub heading: f64,
    pub floor: usize,
}

impl AgentPose {
    pub fn new(x: f64, y: f64, heading: f64, floor: usize) -> Self {
        Self { x, y, heading: normalize_heading(heading), floor }
    }

    pub fn is_valid_in(&self, scene: &Scene) -> bool {
        self.floor < scene.floor_count()
            && scene
                .cell_of(self.x, self.y)
                .is_some_and(|cell| scene.kind(self.floor, cell).is_traversable())
    }

    pub fn on_stairs(&self, scene: &Scene) -> bool {
        scene
            .cell_of(self.x, self.y)
            .is_some_and(|cell| scene.kind(self.floor, cell) == CellKind::Stair)
    }
}

pub fn normalize_heading(h: f64) -> f64 {
    let h = h.rem_euclid(360.0);
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl Action {
    /// Wire name used by the interactive session protocol.
    pub fn wire_name(self) -> &'static str {
        match self {
            Action::Forward => "forward",
            Action::TurnLeft => "left",
            Action::TurnRight => "right",
            Action::Stop => "stop",
        }
    }

    pub fn from_wire(name: &str) -> Option<Self> {
        match name {
            "forward" => Some(Action::Forward),
            "left" => Some(Action::TurnLeft),
            "right" => Some(Action::TurnRight),
            "stop" => Some(Action::Stop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionParams {
    /// Meters advanced by one Forward action.
    pub forward_step: f64,
    /// Degrees rotated by one turn action.
    pub turn_step: f64,
    /// Minimum clearance kept between the agent and an obstacle ahead.
    pub collision_lookahead: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self { forward_step: 0.25, turn_step: 30.0, collision_lookahead: 0.02 }
    }
}

impl MotionParams {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.forward_step > 0.0 && self.forward_step.is_finite()) {
            return Err(crate::Error::NonPositive("forward_step"));
        }
        if !(self.turn_step > 0.0 && self.turn_step <= 360.0) {
            return Err(crate::Error::NonPositive("turn_step"));
        }
        let turns = 360.0 / self.turn_step;
        if (turns - turns.round()).abs() > 1e-9 {
            return Err(crate::Error::Config(format!(
                "turn_step {} does not divide 360",
                self.turn_step
            )));
        }
        if !(self.collision_lookahead >= 0.0) {
            return Err(crate::Error::Config("collision_lookahead must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub pose: AgentPose,
    pub collided: bool,
    /// Free range along the resulting heading, capped at [`PROBE_RANGE`].
    pub obstacle_distance: f64,
    /// Meters actually travelled.
    pub moved: f64,
}

/// Free range ahead of a pose.
pub fn obstacle_distance(scene: &Scene, pose: &AgentPose) -> f64 {
    cast(scene, pose.floor, pose.x, pose.y, pose.heading, PROBE_RANGE).distance
}

/// Applies one discrete action to the agent.
pub fn step(scene: &Scene, pose: &AgentPose, action: Action, motion: &MotionParams) -> StepOutcome {
    let mut next = *pose;
    let mut collided = false;
    let mut moved = 0.0;
    match action {
        Action::TurnLeft => next.heading = normalize_heading(pose.heading - motion.turn_step),
        Action::TurnRight => next.heading = normalize_heading(pose.heading + motion.turn_step),
        Action::Stop => {}
        Action::Forward => {
            let d = motion.forward_step;
            let margin = motion.collision_lookahead;
            let ray = cast(scene, pose.floor, pose.x, pose.y, pose.heading, d + margin);
            moved = if ray.hit.is_none() {
                d
            } else {
                collided = true;
                (ray.distance - margin).max(0.0)
            };
            if moved > 0.0 {
                let (dy, dx) = pose.heading.to_radians().sin_cos();
                next.x = pose.x + moved * dx;
                next.y = pose.y + moved * dy;
                next.floor = floor_after_moving(scene, pose.floor, pose.x, pose.y, pose.heading, moved);
                if !next.is_valid_in(scene) {
                    // Numerical corner case: never leave the agent inside a wall.
                    next = *pose;
                    moved = 0.0;
                    collided = true;
                }
            }
        }
    }
    StepOutcome { obstacle_distance: obstacle_distance(scene, &next), pose: next, collided, moved }
}
