use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geodesic::{DistanceField, Target};
use super::motion::AgentPose;
use super::scene::{Cell, CellKind, Scene};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub scene_id: String,
    pub start: AgentPose,
    pub goal_category: usize,
    /// Geodesic distance from the start to the nearest goal instance, meters.
    pub shortest_distance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub min_start_distance: f64,
    /// Start headings are multiples of this angle.
    pub heading_step: f64,
    /// Restrict starts to one floor.
    pub start_floor: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { min_start_distance: 1.0, heading_step: 30.0, start_floor: None }
    }
}

/// Free, object-less cells whose geodesic distance to the category is finite
/// and at least `min_start_distance`, in floor/row/column order.
pub fn eligible_starts(scene: &Scene, field: &DistanceField, config: &SamplerConfig) -> Vec<(usize, Cell)> {
    let mut out = Vec::new();
    for f in 0..scene.floor_count() {
        if config.start_floor.is_some_and(|sf| sf != f) {
            continue;
        }
        for r in 0..scene.height() {
            for c in 0..scene.width() {
                let cell = (r, c);
                if scene.kind(f, cell) != CellKind::Free || scene.object_at(f, cell).is_some() {
                    continue;
                }
                let d = field.at(f, cell);
                if d.is_finite() && d >= config.min_start_distance {
                    out.push((f, cell));
                }
            }
        }
    }
    out
}

/// Draws a start pose uniformly over eligible cells.
pub fn sample_episode(scene: &Scene, category: usize, seed: u64, config: &SamplerConfig) -> Result<EpisodeSpec> {
    if !scene.objects().iter().any(|o| o.category == category) {
        return Err(Error::MissingCategory(category));
    }
    let field = DistanceField::new(scene, Target::Category(category));
    let eligible = eligible_starts(scene, &field, config);
    if eligible.is_empty() {
        return Err(Error::NoValidStart { min_distance: config.min_start_distance });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (floor, cell) = eligible[rng.gen_range(0..eligible.len())];
    let headings = ((360.0 / config.heading_step).round() as u32).max(1);
    let heading = f64::from(rng.gen_range(0..headings)) * config.heading_step;
    let (x, y) = scene.cell_center(cell);
    Ok(EpisodeSpec {
        scene_id: scene.id().to_string(),
        start: AgentPose::new(x, y, heading, floor),
        goal_category: category,
        shortest_distance: field.at(floor, cell),
        seed,
    })
}
