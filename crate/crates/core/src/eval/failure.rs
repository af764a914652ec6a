use serde::{Deserialize, Serialize};

use super::config::FailureRules;
use super::log::{StepEvent, StepRecord};
use super::runner::EpisodeResult;
use crate::policy::GoalSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureTaxonomy {
    Misdetection,
    IncompleteExploration,
    Trapped,
    NoStopNearTarget,
    WrongFloor,
    MapError,
    FalseNegativeSuccess,
}

impl FailureTaxonomy {
    pub const ALL: [FailureTaxonomy; 7] = [
        FailureTaxonomy::Misdetection,
        FailureTaxonomy::IncompleteExploration,
        FailureTaxonomy::Trapped,
        FailureTaxonomy::NoStopNearTarget,
        FailureTaxonomy::WrongFloor,
        FailureTaxonomy::MapError,
        FailureTaxonomy::FalseNegativeSuccess,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FailureTaxonomy::Misdetection => "misdetection",
            FailureTaxonomy::IncompleteExploration => "incomplete_exploration",
            FailureTaxonomy::Trapped => "trapped",
            FailureTaxonomy::NoStopNearTarget => "no_stop_near_target",
            FailureTaxonomy::WrongFloor => "wrong_floor",
            FailureTaxonomy::MapError => "map_error",
            FailureTaxonomy::FalseNegativeSuccess => "false_negative_success",
        }
    }
}

/// Facts about an episode prefix that the classification rules consult.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureEvidence {
    /// Some goal-category cell was ever present in the map.
    pub target_mapped: bool,
    /// A target override pointed at a cell holding no true target.
    pub misdetection_override: bool,
    pub final_floor_has_target: bool,
    pub untrap_in_window: usize,
    pub moved_in_window: f64,
    pub window_len: usize,
    /// Steps spent chasing a detected target from closer than the
    /// near-target distance.
    pub near_target_steps: usize,
    /// A mapped goal-category cell has no true target nearby.
    pub map_error: bool,
}

impl FailureEvidence {
    /// Evidence from logged steps plus map-derived flags.
    pub fn from_steps(
        steps: &[StepRecord],
        rules: &FailureRules,
        target_mapped: bool,
        final_floor_has_target: bool,
        map_error: bool,
    ) -> Self {
        let window = &steps[steps.len().saturating_sub(rules.trapped_window)..];
        let misdetection_override = steps.iter().any(|s| {
            s.events.iter().any(|e| matches!(e, StepEvent::Override { true_target: false, .. }))
        });
        let near_target_steps = steps
            .iter()
            .filter(|s| {
                s.goal.is_some_and(|g| g.source == GoalSource::TargetOverride)
                    && s.d_goal < rules.near_target_distance
            })
            .count();
        Self {
            target_mapped,
            misdetection_override,
            final_floor_has_target,
            untrap_in_window: window
                .iter()
                .filter(|s| s.events.iter().any(|e| matches!(e, StepEvent::Untrap { .. })))
                .count(),
            moved_in_window: window.iter().map(|s| s.moved).sum(),
            window_len: window.len(),
            near_target_steps,
            map_error,
        }
    }
}

/// First matching rule of the cascade; `None` for successful episodes.
pub fn classify_failure(
    result: &EpisodeResult,
    evidence: &FailureEvidence,
    rules: &FailureRules,
    success_radius: f64,
) -> Option<FailureTaxonomy> {
    if result.success {
        return None;
    }
    let label = if evidence.target_mapped && result.final_distance <= success_radius + rules.near_miss_slack {
        FailureTaxonomy::FalseNegativeSuccess
    } else if evidence.misdetection_override {
        FailureTaxonomy::Misdetection
    } else if !evidence.final_floor_has_target {
        FailureTaxonomy::WrongFloor
    } else if !result.stopped
        && (evidence.untrap_in_window >= rules.trapped_activations
            || (evidence.window_len >= rules.trapped_window && evidence.moved_in_window < rules.trapped_displacement))
    {
        FailureTaxonomy::Trapped
    } else if evidence.target_mapped && evidence.near_target_steps >= rules.near_target_steps {
        FailureTaxonomy::NoStopNearTarget
    } else if evidence.map_error {
        FailureTaxonomy::MapError
    } else {
        FailureTaxonomy::IncompleteExploration
    };
    Some(label)
}
