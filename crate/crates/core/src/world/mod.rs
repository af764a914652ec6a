//! Ground-truth environment: scenes, agent kinematics, sensing, geodesic
//! distances, episode sampling and procedural scene generation.

mod episode;
mod generate;
pub(crate) mod geodesic;
mod motion;
pub mod raycast;
mod scene;
mod sensor;

pub use episode::{eligible_starts, sample_episode, EpisodeSpec, SamplerConfig};
pub use generate::{generate_scene, is_connected, GenerateParams};
pub use geodesic::{geodesic_distance, DistanceField, Target};
pub use motion::{normalize_heading, obstacle_distance, step, Action, AgentPose, MotionParams, StepOutcome, PROBE_RANGE};
pub use scene::{canonical_json, load_scene, save_scene, Cell, CellKind, ObjectInstance, Scene, StairLink};
pub use sensor::{render_observation, Observation, SensorConfig};
