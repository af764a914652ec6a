use serde::{Deserialize, Serialize};

use super::config::EvalMode;
use super::runner::EpisodeResult;
use crate::error::{Error, Result};
use crate::policy::LongTermGoal;
use crate::world::{Action, AgentPose, EpisodeSpec};

/// Serializes non-finite floats as `null` and reads `null` back as +inf.
pub mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Agent,
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepEvent {
    /// The untrapping helper replaced the planner's action.
    Untrap { action: Action },
    /// Dynamic goal selection ran; `d_goal_in` is the distance it saw.
    DynamicGoal {
        #[serde(with = "inf_as_null")]
        d_goal_in: f64,
        switched: bool,
    },
    /// The map was cleared by the remapping mask.
    Remap,
    /// A detected goal-category cell took over as goal.
    Override { row: i64, col: i64, true_target: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Pose after the action.
    pub pose: AgentPose,
    pub action: Action,
    pub collided: bool,
    /// Meters travelled during this step.
    pub moved: f64,
    /// Active goal in global map cells.
    pub goal: Option<LongTermGoal>,
    /// Goal proposed by the policy (after dynamic selection), before any
    /// target override.
    pub policy_goal: Option<LongTermGoal>,
    pub events: Vec<StepEvent>,
    pub r1: f64,
    pub r2: f64,
    #[serde(with = "inf_as_null")]
    pub d_goal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub spec: EpisodeSpec,
    pub config_digest: String,
    pub operator: Operator,
    pub fixed_cap: usize,
    pub dynamic_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogLine {
    Header(LogHeader),
    Step(StepRecord),
    Result { mode: EvalMode, result: EpisodeResult },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub header: LogHeader,
    pub steps: Vec<StepRecord>,
    pub results: Vec<(EvalMode, EpisodeResult)>,
}

impl TrajectoryLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &LogLine| {
            out.push_str(&serde_json::to_string(line).expect("log lines serialize"));
            out.push('\n');
        };
        push(&LogLine::Header(self.header.clone()));
        for s in &self.steps {
            push(&LogLine::Step(s.clone()));
        }
        for (mode, r) in &self.results {
            push(&LogLine::Result { mode: *mode, result: r.clone() });
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut results = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: LogLine = serde_json::from_str(line)
                .map_err(|e| Error::Parse { location: format!("line {}", i + 1), message: e.to_string() })?;
            match parsed {
                LogLine::Header(h) if header.is_none() => header = Some(h),
                LogLine::Header(_) => {
                    return Err(Error::Parse { location: format!("line {}", i + 1), message: "second header".into() })
                }
                LogLine::Step(s) => {
                    if s.step != steps.len() {
                        return Err(Error::Parse {
                            location: format!("line {}", i + 1),
                            message: format!("step index {} out of sequence", s.step),
                        });
                    }
                    steps.push(s)
                }
                LogLine::Result { mode, result } => results.push((mode, result)),
            }
        }
        let header = header.ok_or_else(|| Error::Parse { location: "line 1".into(), message: "missing header".into() })?;
        Ok(Self { header, steps, results })
    }

    pub fn result(&self, mode: EvalMode) -> Option<&EpisodeResult> {
        self.results.iter().find(|(m, _)| *m == mode).map(|(_, r)| r)
    }
}
