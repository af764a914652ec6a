use serde::{Deserialize, Serialize};

use super::motion::AgentPose;
use super::raycast::cast_view;
use super::scene::Scene;

/// Horizontal depth + semantic scanner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub fov_degrees: f64,
    pub ray_count: usize,
    pub max_range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self { fov_degrees: 79.0, ray_count: 15, max_range: 5.0 }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.ray_count == 0 {
            return Err(crate::Error::NonPositive("ray_count"));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(crate::Error::NonPositive("max_range"));
        }
        if !(self.fov_degrees >= 0.0 && self.fov_degrees <= 360.0) {
            return Err(crate::Error::OutOfRange(format!("fov_degrees {}", self.fov_degrees)));
        }
        Ok(())
    }

    /// Absolute angle of ray `i` for an agent facing `heading`.
    pub fn ray_angle(&self, heading: f64, i: usize) -> f64 {
        if self.ray_count == 1 {
            return heading;
        }
        heading - self.fov_degrees / 2.0 + i as f64 * self.fov_degrees / (self.ray_count - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub depth: Vec<f64>,
    pub true_labels: Vec<Option<usize>>,
    pub pose_reading: AgentPose,
    pub sensor: SensorConfig,
    /// Rays that ended at a stair portal with no return.
    #[serde(default)]
    pub open: Vec<bool>,
}

impl Observation {
    /// Whether ray `i` ended without hitting anything, at maximum range or
    /// at a stair portal.
    pub fn is_clipped(&self, i: usize) -> bool {
        self.depth[i] >= self.sensor.max_range || self.open.get(i).copied().unwrap_or(false)
    }
}

pub fn render_observation(scene: &Scene, pose: &AgentPose, sensor: &SensorConfig) -> Observation {
    let mut depth = Vec::with_capacity(sensor.ray_count);
    let mut true_labels = Vec::with_capacity(sensor.ray_count);
    let mut open = Vec::with_capacity(sensor.ray_count);
    for i in 0..sensor.ray_count {
        let ray = cast_view(scene, pose.floor, pose.x, pose.y, sensor.ray_angle(pose.heading, i), sensor.max_range);
        let label = ray
            .hit
            .and_then(|h| h.cell.and_then(|cell| scene.object_at(h.floor, cell)))
            .map(|o| o.category);
        depth.push(ray.distance);
        true_labels.push(label);
        open.push(ray.at_portal);
    }
    Observation { depth, true_labels, pose_reading: *pose, sensor: *sensor, open }
}
