//! Long-term goal selection, local planning and rewards.

mod goals;
mod planner;
pub(crate) mod reward;

pub use goals::{
    continuous_goal, corner_goal, discrete_goal, frontier_goal, inset_corners, target_override, CoordinateSource,
    GoalScorer, GoalSource, LongTermGoal, Policy, PolicyConfig, PolicyKind, UniformCoordinates, UniformScorer,
};
pub use planner::{local_plan, PlanOutput, Planner, PlannerConfig};
pub use reward::{compute_reward, RewardConfig, RewardState, RewardType};
