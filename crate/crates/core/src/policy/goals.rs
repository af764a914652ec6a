use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perception::{extract_frontiers, FrontierSet, SemanticMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSource {
    Corner,
    Frontier,
    Discrete,
    Continuous,
    TargetOverride,
}

/// Goal cell in some map frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LongTermGoal {
    pub row: i64,
    pub col: i64,
    pub source: GoalSource,
}

impl LongTermGoal {
    pub fn new(row: i64, col: i64, source: GoalSource) -> Self {
        Self { row, col, source }
    }

    /// Same goal expressed in a frame shifted by `(dr, dc)`.
    pub fn shifted(self, dr: i64, dc: i64) -> Self {
        Self { row: self.row + dr, col: self.col + dc, ..self }
    }
}

/// The four map corners moved `margin` cells inward, clockwise from the
/// top-left.
pub fn inset_corners(m: usize, margin: usize) -> [(i64, i64); 4] {
    let lo = margin.min(m.saturating_sub(1) / 2) as i64;
    let hi = m as i64 - 1 - lo;
    [(lo, lo), (lo, hi), (hi, hi), (hi, lo)]
}

pub fn corner_goal(m: usize, margin: usize, rng: &mut impl Rng) -> LongTermGoal {
    let (row, col) = inset_corners(m, margin)[rng.gen_range(0..4)];
    LongTermGoal::new(row, col, GoalSource::Corner)
}

/// Centroid of a uniformly chosen cluster, rounded to the nearest cell.
pub fn frontier_goal(frontiers: &FrontierSet, rng: &mut impl Rng) -> Option<LongTermGoal> {
    if frontiers.is_empty() {
        return None;
    }
    let cl = &frontiers.clusters[rng.gen_range(0..frontiers.len())];
    Some(LongTermGoal::new(cl.centroid.0.round() as i64, cl.centroid.1.round() as i64, GoalSource::Frontier))
}

/// Candidate with the highest score; ties go to the lowest index.
pub fn discrete_goal(candidates: &[(i64, i64)], scores: &[f64]) -> Result<LongTermGoal> {
    if candidates.len() != scores.len() {
        return Err(Error::LengthMismatch { what: "candidates vs scores", left: candidates.len(), right: scores.len() });
    }
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidates"));
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    let (row, col) = candidates[best];
    Ok(LongTermGoal::new(row, col, GoalSource::Discrete))
}

/// Maps `(a1, a2)` in the unit square to a cell, rounding half up.
pub fn continuous_goal(a1: f64, a2: f64, m: usize) -> Result<LongTermGoal> {
    for a in [a1, a2] {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::OutOfRange(format!("continuous action {a} outside [0, 1]")));
        }
    }
    if m == 0 {
        return Err(Error::NonPositive("local map size"));
    }
    let scale = (m - 1) as f64;
    let to_cell = |a: f64| (a * scale + 0.5).floor() as i64;
    Ok(LongTermGoal::new(to_cell(a1), to_cell(a2), GoalSource::Continuous))
}

/// Goal-category cell nearest (Euclidean) to `agent`, ties to the first
/// in row-major order.
pub fn target_override(map: &SemanticMap, category: usize, agent: (i64, i64)) -> Option<LongTermGoal> {
    if category >= map.categories() {
        return None;
    }
    let m = map.size();
    let ch = map.channel(SemanticMap::category_channel(category));
    let mut best: Option<(i64, usize)> = None;
    for (r, row) in ch.chunks_exact(m).enumerate() {
        if row.iter().all(|&v| v == 0) {
            continue;
        }
        for (c, _) in row.iter().enumerate().filter(|(_, &v)| v != 0) {
            let d2 = (r as i64 - agent.0).pow(2) + (c as i64 - agent.1).pow(2);
            if best.map_or(true, |(bd, _)| d2 < bd) {
                best = Some((d2, r * m + c));
            }
        }
    }
    best.map(|(_, i)| LongTermGoal::new((i / m) as i64, (i % m) as i64, GoalSource::TargetOverride))
}

/// Scores candidate goals for [`PolicyKind::DiscreteCandidate`].
pub trait GoalScorer: Send {
    fn scores(&mut self, local: &SemanticMap, candidates: &[(i64, i64)], rng: &mut ChaCha8Rng) -> Vec<f64>;
}

/// Produces `(a1, a2)` for [`PolicyKind::ContinuousScripted`].
pub trait CoordinateSource: Send {
    fn coordinates(&mut self, local: &SemanticMap, rng: &mut ChaCha8Rng) -> (f64, f64);
}

/// Independent uniform scores: a stochastic baseline scorer.
#[derive(Debug, Default, Clone, Copy)]
pub struct UniformScorer;

impl GoalScorer for UniformScorer {
    fn scores(&mut self, _: &SemanticMap, candidates: &[(i64, i64)], rng: &mut ChaCha8Rng) -> Vec<f64> {
        candidates.iter().map(|_| rng.gen()).collect()
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct UniformCoordinates;

impl CoordinateSource for UniformCoordinates {
    fn coordinates(&mut self, _: &SemanticMap, rng: &mut ChaCha8Rng) -> (f64, f64) {
        (rng.gen(), rng.gen())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    CornerRandom,
    FrontierRandom,
    DiscreteCandidate,
    ContinuousScripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Steps between fresh goal predictions.
    pub goal_update_frequency: usize,
    /// Local-map cells for the discrete policy; empty means the inset corners.
    pub candidates: Vec<(i64, i64)>,
    pub corner_margin: usize,
    pub min_frontier_size: usize,
    pub rng_seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::FrontierRandom,
            goal_update_frequency: 25,
            candidates: Vec::new(),
            corner_margin: 24,
            min_frontier_size: 3,
            rng_seed: 0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.goal_update_frequency == 0 {
            return Err(Error::NonPositive("goal_update_frequency"));
        }
        Ok(())
    }
}

/// A long-term goal policy with its own random stream.
pub struct Policy {
    config: PolicyConfig,
    rng: ChaCha8Rng,
    scorer: Box<dyn GoalScorer>,
    coords: Box<dyn CoordinateSource>,
}

impl Policy {
    pub fn new(config: PolicyConfig, episode_seed: u64) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ episode_seed.rotate_left(17));
        Ok(Self { config, rng, scorer: Box::new(UniformScorer), coords: Box::new(UniformCoordinates) })
    }

    pub fn with_scorer(mut self, scorer: Box<dyn GoalScorer>) -> Self {
        self.scorer = scorer;
        self
    }

    pub fn with_coordinates(mut self, coords: Box<dyn CoordinateSource>) -> Self {
        self.coords = coords;
        self
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    /// Fresh goal in the frame of `local`.
    pub fn predict(&mut self, local: &SemanticMap) -> Result<LongTermGoal> {
        let m = local.size();
        match self.config.kind {
            PolicyKind::CornerRandom => Ok(corner_goal(m, self.config.corner_margin, &mut self.rng)),
            PolicyKind::FrontierRandom => {
                let frontiers = extract_frontiers(local, self.config.min_frontier_size);
                Ok(frontier_goal(&frontiers, &mut self.rng)
                    .unwrap_or_else(|| corner_goal(m, self.config.corner_margin, &mut self.rng)))
            }
            PolicyKind::DiscreteCandidate => {
                let candidates = if self.config.candidates.is_empty() {
                    inset_corners(m, self.config.corner_margin).to_vec()
                } else {
                    self.config.candidates.clone()
                };
                let scores = self.scorer.scores(local, &candidates, &mut self.rng);
                discrete_goal(&candidates, &scores)
            }
            PolicyKind::ContinuousScripted => {
                let (a1, a2) = self.coords.coordinates(local, &mut self.rng);
                continuous_goal(a1, a2, m)
            }
        }
    }
}
