//! Episode orchestration, success metrics and failure classification.

mod batch;
mod config;
mod failure;
mod log;
mod metrics;
mod runner;

pub use batch::{run_batch, EpisodeJob};
pub use config::{EvalConfig, EvalMode, FailureRules, MapConfig, Pipeline};
pub use failure::{classify_failure, FailureEvidence, FailureTaxonomy};
pub use log::{inf_as_null, LogHeader, LogLine, Operator, StepEvent, StepRecord, TrajectoryLog};
pub use metrics::{aggregate, dts, dts_raw, max_dynamic_steps, spl, spl_success_only, spl_term, success_rate, MetricsReport};
pub use runner::{run_episode, success_check, Decision, EpisodeDriver, EpisodeResult, EpisodeRun, Perceived};
