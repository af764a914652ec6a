//! Shortest traversable-path distances on the scene grid.
//!
//! Paths move between 8-connected cells (diagonal steps cost `sqrt(2)` and
//! may not cut a corner past an obstacle), follow stair portals exactly as
//! the agent does, and may end by stepping onto a target cell even if that
//! cell is an obstacle (objects usually are).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::motion::AgentPose;
use super::scene::{Cell, Scene};

pub(crate) const NEIGHBORS: [(i64, i64, f64); 8] = [
    (-1, 0, 1.0),
    (1, 0, 1.0),
    (0, -1, 1.0),
    (0, 1, 1.0),
    (-1, -1, std::f64::consts::SQRT_2),
    (-1, 1, std::f64::consts::SQRT_2),
    (1, -1, std::f64::consts::SQRT_2),
    (1, 1, std::f64::consts::SQRT_2),
];

#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    /// Explicit `(floor, cell)` set.
    Cells(&'a [(usize, Cell)]),
    /// Every cell of every instance of the category.
    Category(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct QueueItem {
    pub cost: f64,
    pub node: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn target_mask(scene: &Scene, target: Target<'_>) -> Vec<bool> {
    let plane = scene.width() * scene.height();
    let mut mask = vec![false; plane * scene.floor_count()];
    let mut mark = |f: usize, (r, c): Cell| {
        if f < scene.floor_count() && r < scene.height() && c < scene.width() {
            mask[f * plane + r * scene.width() + c] = true;
        }
    };
    match target {
        Target::Cells(cells) => cells.iter().for_each(|&(f, cell)| mark(f, cell)),
        Target::Category(cat) => scene.category_cells(cat).into_iter().for_each(|(f, cell)| mark(f, cell)),
    }
    mask
}

#[inline]
fn diagonal_clear(scene: &Scene, floor: usize, r: i64, c: i64, dr: i64, dc: i64) -> bool {
    dr == 0
        || dc == 0
        || (scene.kind_or_wall(floor, r + dr, c).is_traversable()
            && scene.kind_or_wall(floor, r, c + dc).is_traversable())
}

/// Geodesic distance in meters from a pose to the nearest target cell;
/// `f64::INFINITY` when no target is reachable.
pub fn geodesic_distance(scene: &Scene, from: &AgentPose, to: Target<'_>) -> f64 {
    let Some(start) = scene.cell_of(from.x, from.y) else {
        return f64::INFINITY;
    };
    let w = scene.width();
    let plane = w * scene.height();
    let targets = target_mask(scene, to);
    let mut dist = vec![f64::INFINITY; plane * scene.floor_count()];
    let start_node = from.floor * plane + start.0 * w + start.1;
    dist[start_node] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(QueueItem { cost: 0.0, node: start_node });

    while let Some(QueueItem { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if targets[node] {
            return cost * scene.cell_size();
        }
        let f = node / plane;
        let r = ((node % plane) / w) as i64;
        let c = (node % w) as i64;
        for &(dr, dc, step) in &NEIGHBORS {
            let (nr, nc) = (r + dr, c + dc);
            if !scene.in_bounds(nr, nc) || !diagonal_clear(scene, f, r, c, dr, dc) {
                continue;
            }
            let ncell = (nr as usize, nc as usize);
            let flat = ncell.0 * w + ncell.1;
            let next = if targets[f * plane + flat] {
                f * plane + flat
            } else if scene.kind(f, ncell).is_traversable() {
                let g = scene.floor_after_entering(f, (r as usize, c as usize), ncell);
                g * plane + flat
            } else {
                continue;
            };
            let nd = cost + step;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(QueueItem { cost: nd, node: next });
            }
        }
    }
    f64::INFINITY
}

/// Distance from every `(floor, cell)` to the nearest target, computed once
/// by a reverse multi-source search. Lookups are O(1).
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    plane: usize,
    cell_size: f64,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn new(scene: &Scene, to: Target<'_>) -> Self {
        let w = scene.width();
        let plane = w * scene.height();
        let floors = scene.floor_count();
        let targets = target_mask(scene, to);
        let mut dist = vec![f64::INFINITY; plane * floors];
        let mut heap = BinaryHeap::new();
        for (node, &is_target) in targets.iter().enumerate() {
            if is_target {
                dist[node] = 0.0;
                heap.push(QueueItem { cost: 0.0, node });
            }
        }

        while let Some(QueueItem { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            let g = node / plane;
            let n = ((node % plane) / w, node % w);
            let (nr, nc) = (n.0 as i64, n.1 as i64);
            let flat_n = n.0 * w + n.1;
            for &(dr, dc, step) in &NEIGHBORS {
                let (pr, pc) = (nr - dr, nc - dc);
                if !scene.in_bounds(pr, pc) {
                    continue;
                }
                let p = (pr as usize, pc as usize);
                for f in 0..floors {
                    if !scene.kind(f, p).is_traversable() || !diagonal_clear(scene, f, pr, pc, dr, dc) {
                        continue;
                    }
                    let valid = if f == g {
                        targets[g * plane + flat_n]
                            || (scene.kind(g, n).is_traversable() && scene.floor_after_entering(g, p, n) == g)
                    } else {
                        !targets[f * plane + flat_n]
                            && scene.kind(f, n).is_traversable()
                            && scene.floor_after_entering(f, p, n) == g
                    };
                    if !valid {
                        continue;
                    }
                    let pnode = f * plane + p.0 * w + p.1;
                    let nd = cost + step;
                    if nd < dist[pnode] {
                        dist[pnode] = nd;
                        heap.push(QueueItem { cost: nd, node: pnode });
                    }
                }
            }
        }
        for d in &mut dist {
            *d *= scene.cell_size();
        }
        Self { width: w, plane, cell_size: scene.cell_size(), dist }
    }

    pub fn at(&self, floor: usize, (r, c): Cell) -> f64 {
        self.dist[floor * self.plane + r * self.width + c]
    }

    pub fn distance(&self, pose: &AgentPose) -> f64 {
        let c = (pose.x / self.cell_size).floor();
        let r = (pose.y / self.cell_size).floor();
        if r < 0.0 || c < 0.0 || c as usize >= self.width || (r as usize) * self.width >= self.plane {
            return f64::INFINITY;
        }
        self.at(pose.floor, (r as usize, c as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::scene::Scene;

    fn scene(rows: &[&str]) -> Scene {
        Scene::from_char_rows("t", 0.05, &[rows.iter().map(|s| s.to_string()).collect()], vec![], vec![])
            .unwrap()
    }

    #[test]
    fn identity_is_zero() {
        let s = scene(&["....."]);
        let pose = AgentPose::new(0.075, 0.025, 0.0, 0);
        let cells = [(0, (0, 1))];
        assert_eq!(geodesic_distance(&s, &pose, Target::Cells(&cells)), 0.0);
    }

    #[test]
    fn straight_corridor() {
        let s = scene(&["..........."]);
        let pose = AgentPose::new(0.025, 0.025, 0.0, 0);
        let cells = [(0, (0, 10))];
        let d = geodesic_distance(&s, &pose, Target::Cells(&cells));
        assert!((d - 0.5).abs() < 1e-12);
        let field = DistanceField::new(&s, Target::Cells(&cells));
        assert!((field.distance(&pose) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unreachable_is_infinite() {
        let s = scene(&["..#.."]);
        let pose = AgentPose::new(0.025, 0.025, 0.0, 0);
        let cells = [(0, (0, 4))];
        assert!(geodesic_distance(&s, &pose, Target::Cells(&cells)).is_infinite());
    }

    #[test]
    fn no_corner_cutting() {
        let s = scene(&[".#", "#."]);
        let pose = AgentPose::new(0.025, 0.025, 0.0, 0);
        let cells = [(0, (1, 1))];
        assert!(geodesic_distance(&s, &pose, Target::Cells(&cells)).is_infinite());
    }

    #[test]
    fn obstacle_target_is_reachable_from_neighbor() {
        let s = scene(&["...#"]);
        let pose = AgentPose::new(0.025, 0.025, 0.0, 0);
        let cells = [(0, (0, 3))];
        assert!((geodesic_distance(&s, &pose, Target::Cells(&cells)) - 0.15).abs() < 1e-12);
    }
}
