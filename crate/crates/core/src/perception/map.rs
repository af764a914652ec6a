use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::raycast::traverse;
use crate::world::{AgentPose, Observation};

/// Channel index of the obstacle layer.
pub const OBSTACLE: usize = 0;
/// Channel index of the explored layer.
pub const EXPLORED: usize = 1;

/// Binary `K x M x M` top-down map with `K = C + 2`: obstacle, explored,
/// then one channel per object category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticMap {
    categories: usize,
    size: usize,
    cell_size: f64,
    /// World `(x, y)` of the corner of cell `(0, 0)`.
    origin: (f64, f64),
    data: Vec<u8>,
}

impl SemanticMap {
    pub fn new(categories: usize, size: usize, cell_size: f64, origin: (f64, f64)) -> Self {
        Self { categories, size, cell_size, origin, data: vec![0; (categories + 2) * size * size] }
    }

    /// Map covering a `width x height` grid with the same cell size, padded
    /// to an even square.
    pub fn covering(categories: usize, width: usize, height: usize, cell_size: f64) -> Self {
        let m = width.max(height);
        Self::new(categories, m + m % 2, cell_size, (0.0, 0.0))
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.categories + 2
    }

    #[inline]
    pub fn categories(&self) -> usize {
        self.categories
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    #[inline]
    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    #[inline]
    pub fn category_channel(category: usize) -> usize {
        category + 2
    }

    #[inline]
    fn plane(&self) -> usize {
        self.size * self.size
    }

    #[inline]
    pub fn channel(&self, ch: usize) -> &[u8] {
        let p = self.plane();
        &self.data[ch * p..(ch + 1) * p]
    }

    #[inline]
    pub fn channel_mut(&mut self, ch: usize) -> &mut [u8] {
        let p = self.plane();
        &mut self.data[ch * p..(ch + 1) * p]
    }

    #[inline]
    pub fn get(&self, ch: usize, r: usize, c: usize) -> bool {
        self.data[ch * self.plane() + r * self.size + c] != 0
    }

    #[inline]
    pub fn set(&mut self, ch: usize, r: usize, c: usize) {
        let p = self.plane();
        self.data[ch * p + r * self.size + c] = 1;
    }

    #[inline]
    pub fn in_bounds(&self, r: i64, c: i64) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.size && (c as usize) < self.size
    }

    #[inline]
    pub fn is_explored(&self, r: usize, c: usize) -> bool {
        self.get(EXPLORED, r, c)
    }

    #[inline]
    pub fn is_obstacle(&self, r: usize, c: usize) -> bool {
        self.get(OBSTACLE, r, c)
    }

    /// Highest category whose channel is set at the cell.
    pub fn top_category(&self, r: usize, c: usize) -> Option<usize> {
        (0..self.categories).rev().find(|&k| self.get(Self::category_channel(k), r, c))
    }

    /// Map cell (row, col) containing a world position; may lie outside
    /// the map.
    #[inline]
    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((y - self.origin.1) / self.cell_size).floor() as i64,
            ((x - self.origin.0) / self.cell_size).floor() as i64,
        )
    }

    /// World position of a cell center.
    #[inline]
    pub fn cell_center(&self, r: i64, c: i64) -> (f64, f64) {
        (self.origin.0 + (c as f64 + 0.5) * self.cell_size, self.origin.1 + (r as f64 + 0.5) * self.cell_size)
    }

    pub fn clear(&mut self) {
        self.data.fill(0);
    }

    pub fn explored_count(&self) -> usize {
        self.channel(EXPLORED).iter().filter(|&&v| v != 0).count()
    }

    /// Explored area in square meters.
    pub fn explored_area(&self) -> f64 {
        self.explored_count() as f64 * self.cell_size * self.cell_size
    }

    /// Cells where any category channel is set, as `(row, col, category)`.
    pub fn category_cells(&self, category: usize) -> Vec<(usize, usize)> {
        let ch = self.channel(Self::category_channel(category));
        ch.iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| (i / self.size, i % self.size))
            .collect()
    }

    pub(crate) fn obstacle_and_explored_mut(&mut self) -> (&mut [u8], &mut [u8]) {
        let p = self.plane();
        let (a, b) = self.data.split_at_mut(p);
        (a, &mut b[..p])
    }

    pub fn raw(&self) -> &[u8] {
        &self.data
    }

    pub(crate) fn copy_from(&mut self, other: &SemanticMap) {
        self.categories = other.categories;
        self.size = other.size;
        self.cell_size = other.cell_size;
        self.origin = other.origin;
        self.data.clear();
        self.data.extend_from_slice(&other.data);
    }
}

/// Traces every ray of an observation into the map.
///
/// Cells entered before the measured depth become explored. When a ray
/// ended on an obstacle (rather than at maximum range) the terminal cell
/// is also marked as obstacle, plus the reported category if any.
pub fn project_to_map(map: &mut SemanticMap, obs: &Observation, labels: &[Option<usize>], pose: &AgentPose) {
    let (ox, oy) = map.origin;
    let (x, y) = (pose.x - ox, pose.y - oy);
    let cs = map.cell_size;
    for (i, &depth) in obs.depth.iter().enumerate() {
        let clipped = obs.is_clipped(i);
        let label = labels.get(i).copied().flatten().filter(|&k| k < map.categories);
        let angle = obs.sensor.ray_angle(pose.heading, i);
        traverse(x, y, angle, cs, f64::INFINITY, |r, c, t| {
            let inside = map.in_bounds(r, c);
            if t < depth {
                if inside {
                    map.set(EXPLORED, r as usize, c as usize);
                }
                return true;
            }
            if !clipped && inside {
                let (r, c) = (r as usize, c as usize);
                map.set(EXPLORED, r, c);
                map.set(OBSTACLE, r, c);
                if let Some(k) = label {
                    map.set(SemanticMap::category_channel(k), r, c);
                }
            }
            false
        });
    }
}

/// `m x m` window of `global` centered on the agent's cell. Local cell
/// `(i, j)` is global cell `(ar - m/2 + i, ac - m/2 + j)`; cells outside
/// the global map are unknown.
pub fn crop_local(global: &SemanticMap, pose: &AgentPose, m: usize) -> Result<SemanticMap> {
    let mut out = SemanticMap::new(global.categories, m, global.cell_size, (0.0, 0.0));
    crop_into(global, pose, m, &mut out)?;
    Ok(out)
}

pub(crate) fn crop_into(global: &SemanticMap, pose: &AgentPose, m: usize, out: &mut SemanticMap) -> Result<()> {
    if m == 0 || m % 2 != 0 {
        return Err(Error::Config(format!("local map size {m} must be even and positive")));
    }
    let (ar, ac) = global.cell_of(pose.x, pose.y);
    let half = (m / 2) as i64;
    let (r0, c0) = (ar - half, ac - half);
    out.categories = global.categories;
    out.size = m;
    out.cell_size = global.cell_size;
    out.origin = (
        global.origin.0 + c0 as f64 * global.cell_size,
        global.origin.1 + r0 as f64 * global.cell_size,
    );
    out.data.resize(global.channels() * m * m, 0);

    let g = global.size as i64;
    let col_lo = c0.clamp(0, g);
    let col_hi = (c0 + m as i64).clamp(col_lo, g);
    let (left, width) = ((col_lo - c0) as usize, (col_hi - col_lo) as usize);
    let (gp, lp) = (global.plane(), m * m);
    for ch in 0..global.channels() {
        for i in 0..m {
            let row = &mut out.data[ch * lp + i * m..ch * lp + (i + 1) * m];
            let gr = r0 + i as i64;
            if width == 0 || gr < 0 || gr >= g {
                row.fill(0);
                continue;
            }
            let src = ch * gp + gr as usize * global.size + col_lo as usize;
            row[..left].fill(0);
            row[left..left + width].copy_from_slice(&global.data[src..src + width]);
            row[left + width..].fill(0);
        }
    }
    Ok(())
}
