use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::goals::{GoalSource, LongTermGoal};
use crate::error::{Error, Result};
use crate::perception::{SemanticMap, EXPLORED, OBSTACLE};
use crate::world::geodesic::{QueueItem, NEIGHBORS};
use crate::world::raycast::traverse;
use crate::world::{normalize_heading, Action, AgentPose, MotionParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Cost multiplier for stepping onto an unexplored cell.
    pub unknown_cost: f64,
    /// Stop when this close (meters of path) to a detected target.
    pub stop_radius: f64,
    /// Obstacles within this Chebyshev radius of the agent or the goal are
    /// ignored so the agent can leave inflated obstacle margins and reach
    /// goals that sit on an obstacle.
    pub clearance_cells: usize,
    /// Distance along the path to the steering waypoint, meters.
    pub lookahead: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { unknown_cost: 1.5, stop_radius: 0.5, clearance_cells: 1, lookahead: 0.25 }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.unknown_cost >= 1.0 && self.unknown_cost.is_finite()) {
            return Err(Error::Config("unknown_cost must be a finite value >= 1".into()));
        }
        if !(self.stop_radius >= 0.0 && self.lookahead > 0.0) {
            return Err(Error::Config("stop_radius must be >= 0 and lookahead > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    pub action: Action,
    /// Weighted path cost to the goal in meters; infinite when unreachable.
    pub d_goal: f64,
    /// Cell steered towards, in map coordinates.
    pub waypoint: (i64, i64),
    /// Cells from the agent to the goal (or to the reachable cell nearest
    /// the goal when it is unreachable).
    pub path: Vec<(i64, i64)>,
}

/// Shortest-path planner with reusable search buffers.
#[derive(Debug, Default)]
pub struct Planner {
    g: Vec<f64>,
    parent: Vec<u32>,
    seen: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<QueueItem>,
}

/// One-shot convenience wrapper around [`Planner::plan`].
pub fn local_plan(
    map: &SemanticMap,
    pose: &AgentPose,
    goal: &LongTermGoal,
    motion: &MotionParams,
    config: &PlannerConfig,
) -> PlanOutput {
    Planner::default().plan(map, pose, goal, motion, config)
}

#[inline]
fn octile(dr: i64, dc: i64) -> f64 {
    let (a, b) = (dr.abs().max(dc.abs()) as f64, dr.abs().min(dc.abs()) as f64);
    (a - b) + b * std::f64::consts::SQRT_2
}

/// Inclusive `(r0, r1, c0, c1)` bounds of the explored cells.
fn explored_bbox(explored: &[u8], m: i64) -> Option<(i64, i64, i64, i64)> {
    let mut bbox: Option<(i64, i64, i64, i64)> = None;
    for (r, row) in explored.chunks_exact(m as usize).enumerate() {
        let Some(first) = row.iter().position(|&v| v != 0) else { continue };
        let last = row.iter().rposition(|&v| v != 0).unwrap_or(first);
        let (r, first, last) = (r as i64, first as i64, last as i64);
        bbox = Some(match bbox {
            None => (r, r, first, last),
            Some((r0, _, c0, c1)) => (r0, r, c0.min(first), c1.max(last)),
        });
    }
    bbox
}

/// Blocking and cost rules of one planning query.
struct Grid<'m> {
    m: i64,
    obstacle: &'m [u8],
    explored: &'m [u8],
    start: (i64, i64),
    goal_idx: usize,
    clearance: i64,
    unknown_cost: f64,
    bbox: Option<(i64, i64, i64, i64)>,
}

impl Grid<'_> {
    #[inline]
    fn idx(&self, r: i64, c: i64) -> usize {
        (r * self.m + c) as usize
    }

    #[inline]
    fn cell(&self, i: usize) -> (i64, i64) {
        (i as i64 / self.m, i as i64 % self.m)
    }

    #[inline]
    fn inside(&self, r: i64, c: i64) -> bool {
        r >= 0 && c >= 0 && r < self.m && c < self.m
    }

    #[inline]
    fn blocked(&self, r: i64, c: i64) -> bool {
        let i = self.idx(r, c);
        let (gr, gc) = self.cell(self.goal_idx);
        self.obstacle[i] != 0
            && ((r - self.start.0).abs() > self.clearance || (c - self.start.1).abs() > self.clearance)
            && ((r - gr).abs() > self.clearance || (c - gc).abs() > self.clearance)
    }

    /// Obstacle test for the next motion: only the agent's own cell and the
    /// goal surroundings are exempt.
    #[inline]
    fn blocks_motion(&self, r: i64, c: i64) -> bool {
        let i = self.idx(r, c);
        let (gr, gc) = self.cell(self.goal_idx);
        self.obstacle[i] != 0
            && (r, c) != self.start
            && ((r - gr).abs() > self.clearance || (c - gc).abs() > self.clearance)
    }

    /// Whether the move from `(r, c)` by `(dr, dc)` is legal.
    #[inline]
    fn can_step(&self, r: i64, c: i64, dr: i64, dc: i64) -> bool {
        let (nr, nc) = (r + dr, c + dc);
        self.inside(nr, nc)
            && !self.blocked(nr, nc)
            && (dr == 0 || dc == 0 || !(self.blocked(r + dr, c) || self.blocked(r, c + dc)))
    }

    fn box_dist(&self, r: i64, c: i64) -> f64 {
        match self.bbox {
            Some((r0, r1, c0, c1)) => octile((r0 - r).max(r - r1).max(0), (c0 - c).max(c - c1).max(0)),
            None => f64::INFINITY,
        }
    }
}

/// Admissible cost-to-go towards one target cell. Every unexplored cell
/// costs `unknown_cost` to enter and all explored cells lie in the bounding
/// box, so a path pays the surcharge at least on its stretch outside it.
struct Heuristic {
    target: (i64, i64),
    target_box: f64,
    surcharge: f64,
}

impl Heuristic {
    fn new(grid: &Grid<'_>, target: (i64, i64)) -> Self {
        Self { target, target_box: grid.box_dist(target.0, target.1), surcharge: grid.unknown_cost - 1.0 }
    }

    #[inline]
    fn at(&self, grid: &Grid<'_>, r: i64, c: i64) -> f64 {
        let direct = octile(self.target.0 - r, self.target.1 - c);
        if self.surcharge == 0.0 {
            return direct;
        }
        let outside = direct.min((grid.box_dist(r, c) - std::f64::consts::SQRT_2).max(0.0) + self.target_box);
        direct + self.surcharge * outside
    }
}

/// Cells the goal-side flood may visit before the planner gives up on
/// proving the goal sealed off.
const FLOOD_BUDGET: usize = 16_384;

impl Planner {
    fn reset(&mut self, n: usize) {
        if self.seen.len() != n {
            self.g = vec![0.0; n];
            self.parent = vec![0; n];
            self.seen = vec![0; n];
            self.epoch = 0;
        }
        self.next_epoch();
    }

    fn next_epoch(&mut self) {
        if self.epoch == u32::MAX {
            self.seen.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.heap.clear();
    }

    /// A* from the start; `true` when `target` was reached. On failure the
    /// search has visited every reachable cell.
    fn search(&mut self, grid: &Grid<'_>, target: usize) -> bool {
        self.next_epoch();
        let epoch = self.epoch;
        let h = Heuristic::new(grid, grid.cell(target));
        let s = grid.idx(grid.start.0, grid.start.1);
        self.g[s] = 0.0;
        self.seen[s] = epoch;
        self.heap.push(QueueItem { cost: h.at(grid, grid.start.0, grid.start.1), node: s });
        while let Some(QueueItem { cost, node }) = self.heap.pop() {
            let (r, c) = grid.cell(node);
            if cost > self.g[node] + h.at(grid, r, c) {
                continue;
            }
            if node == target {
                return true;
            }
            for &(dr, dc, step) in &NEIGHBORS {
                if !grid.can_step(r, c, dr, dc) {
                    continue;
                }
                let (nr, nc) = (r + dr, c + dc);
                let j = grid.idx(nr, nc);
                let mult = if grid.explored[j] == 0 { grid.unknown_cost } else { 1.0 };
                let ng = self.g[node] + step * mult;
                if self.seen[j] != epoch || ng < self.g[j] {
                    self.seen[j] = epoch;
                    self.g[j] = ng;
                    self.parent[j] = node as u32;
                    self.heap.push(QueueItem { cost: ng + h.at(grid, nr, nc), node: j });
                }
            }
        }
        false
    }

    /// Cells that can reach the goal, when there are few of them and the
    /// start is not among them. Moves are reversible, so this is the goal's
    /// side of a disconnected grid.
    fn sealed_goal_region(&mut self, grid: &Grid<'_>) -> Option<Vec<usize>> {
        self.next_epoch();
        let epoch = self.epoch;
        let s = grid.idx(grid.start.0, grid.start.1);
        let mut region = vec![grid.goal_idx];
        self.seen[grid.goal_idx] = epoch;
        let mut head = 0;
        while head < region.len() {
            let (r, c) = grid.cell(region[head]);
            head += 1;
            for &(dr, dc, _) in &NEIGHBORS {
                // Reverse of a legal move into (r, c).
                let (pr, pc) = (r + dr, c + dc);
                if !grid.inside(pr, pc) || !grid.can_step(pr, pc, -dr, -dc) {
                    continue;
                }
                if pr == grid.start.0 && pc == grid.start.1 {
                    return None;
                }
                let j = grid.idx(pr, pc);
                if self.seen[j] != epoch {
                    self.seen[j] = epoch;
                    region.push(j);
                    if region.len() > FLOOD_BUDGET {
                        return None;
                    }
                }
            }
        }
        (!region.contains(&s)).then_some(region)
    }

    /// Reachable cell nearest the goal (squared Euclidean cells, then path
    /// cost, then index), leaving its search tree in `parent`.
    fn nearest_reachable(&mut self, grid: &Grid<'_>, sealed: &[usize]) -> usize {
        let goal = grid.cell(grid.goal_idx);
        let s = grid.idx(grid.start.0, grid.start.1);
        let sealed: std::collections::HashSet<usize> = sealed.iter().copied().collect();
        let mut rings: Vec<(i64, usize)> = Vec::new();
        let mut radius = 1;
        loop {
            rings.clear();
            for r in (goal.0 - radius).max(0)..=(goal.0 + radius).min(grid.m - 1) {
                for c in (goal.1 - radius).max(0)..=(goal.1 + radius).min(grid.m - 1) {
                    let d2 = (r - goal.0).pow(2) + (c - goal.1).pow(2);
                    let j = grid.idx(r, c);
                    if d2 <= radius * radius && !sealed.contains(&j) && (j == s || !grid.blocked(r, c)) {
                        rings.push((d2, j));
                    }
                }
            }
            rings.sort_unstable();
            let mut i = 0;
            while i < rings.len() {
                let d2 = rings[i].0;
                let mut best: Option<(f64, usize)> = None;
                while i < rings.len() && rings[i].0 == d2 {
                    let j = rings[i].1;
                    i += 1;
                    if self.search(grid, j) && best.map_or(true, |(g, _)| self.g[j] < g) {
                        best = Some((self.g[j], j));
                    }
                }
                if let Some((_, j)) = best {
                    self.search(grid, j);
                    return j;
                }
            }
            if radius >= 2 * grid.m {
                // Only the start itself is left.
                self.search(grid, s);
                return s;
            }
            radius *= 2;
        }
    }

    pub fn plan(
        &mut self,
        map: &SemanticMap,
        pose: &AgentPose,
        goal: &LongTermGoal,
        motion: &MotionParams,
        config: &PlannerConfig,
    ) -> PlanOutput {
        let m = map.size() as i64;
        let clamp = |v: i64| v.clamp(0, m - 1);
        let (ar, ac) = map.cell_of(pose.x, pose.y);
        let start = (clamp(ar), clamp(ac));
        let goal_cell = (clamp(goal.row), clamp(goal.col));
        let explored = map.channel(EXPLORED);
        let grid = Grid {
            m,
            obstacle: map.channel(OBSTACLE),
            explored,
            start,
            goal_idx: (goal_cell.0 * m + goal_cell.1) as usize,
            clearance: config.clearance_cells as i64,
            unknown_cost: config.unknown_cost,
            bbox: explored_bbox(explored, m),
        };
        self.reset((m * m) as usize);
        let s = grid.idx(start.0, start.1);

        let (reached, target) = match self.sealed_goal_region(&grid) {
            Some(sealed) => (false, self.nearest_reachable(&grid, &sealed)),
            None if self.search(&grid, grid.goal_idx) => (true, grid.goal_idx),
            None => {
                let epoch = self.epoch;
                let mut best = (i64::MAX, f64::INFINITY, s);
                for (j, &e) in self.seen.iter().enumerate() {
                    if e != epoch {
                        continue;
                    }
                    let (r, c) = grid.cell(j);
                    let d2 = (r - goal_cell.0).pow(2) + (c - goal_cell.1).pow(2);
                    if d2 < best.0 || (d2 == best.0 && self.g[j] < best.1) {
                        best = (d2, self.g[j], j);
                    }
                }
                (false, best.2)
            }
        };
        let d_goal = if reached { self.g[target] * map.cell_size() } else { f64::INFINITY };
        let mut path = vec![grid.cell(target)];
        let mut cur = target;
        while cur != s {
            cur = self.parent[cur] as usize;
            path.push(grid.cell(cur));
        }
        path.reverse();
        let blocked = |r: i64, c: i64| grid.blocks_motion(r, c);

        let lookahead = config.lookahead / map.cell_size();
        let mut along = 0.0;
        let mut waypoint = path[path.len() - 1];
        for w in path.windows(2) {
            along += octile(w[1].0 - w[0].0, w[1].1 - w[0].1);
            if along >= lookahead {
                waypoint = w[1];
                break;
            }
        }

        let action = if goal.source == GoalSource::TargetOverride && d_goal <= config.stop_radius {
            Action::Stop
        } else if path.len() == 1 {
            // Nothing left to approach: look around.
            Action::TurnLeft
        } else {
            let (wx, wy) = map.cell_center(waypoint.0, waypoint.1);
            let bearing = (wy - pose.y).atan2(wx - pose.x).to_degrees();
            let mut error = normalize_heading(bearing - pose.heading);
            if error > 180.0 {
                error -= 360.0;
            }
            let turn = if error > 0.0 && error < 180.0 { Action::TurnRight } else { Action::TurnLeft };
            // Steer for the reachable heading closest to the waypoint. The
            // choice depends only on where the agent stands, so a blocked
            // best heading cannot make it turn back and forth.
            let steps = (180.0 / motion.turn_step).floor() as i64;
            let mut options: Vec<(f64, i64)> = (-steps..=steps)
                .map(|k| {
                    let mut diff = normalize_heading(error - k as f64 * motion.turn_step);
                    if diff > 180.0 {
                        diff -= 360.0;
                    }
                    (diff.abs(), k)
                })
                .collect();
            options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.abs().cmp(&b.1.abs())).then(a.1.cmp(&b.1)));
            options.dedup_by_key(|o| normalize_heading(o.1 as f64 * motion.turn_step).to_bits());
            let chosen = options.iter().map(|&(_, k)| k).find(|&k| {
                self.segment_clear(map, pose, pose.heading + k as f64 * motion.turn_step, motion.forward_step, &blocked)
            });
            match chosen {
                Some(0) => Action::Forward,
                Some(k) if k > 0 => Action::TurnRight,
                Some(_) => Action::TurnLeft,
                None => turn,
            }
        };
        PlanOutput { action, d_goal, waypoint, path }
    }

    fn segment_clear(
        &self,
        map: &SemanticMap,
        pose: &AgentPose,
        heading: f64,
        length: f64,
        blocked: &impl Fn(i64, i64) -> bool,
    ) -> bool {
        let (ox, oy) = map.origin();
        let mut clear = true;
        traverse(pose.x - ox, pose.y - oy, heading, map.cell_size(), length, |r, c, _| {
            if map.in_bounds(r, c) && blocked(r, c) {
                clear = false;
                return false;
            }
            true
        });
        clear
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::EXPLORED;

    fn open_map() -> SemanticMap {
        let mut m = SemanticMap::new(1, 80, 0.05, (0.0, 0.0));
        m.channel_mut(EXPLORED).fill(1);
        m
    }

    fn frontier_goal_at(r: i64, c: i64) -> LongTermGoal {
        LongTermGoal::new(r, c, GoalSource::Frontier)
    }

    #[test]
    fn goal_ahead_moves_forward() {
        let map = open_map();
        let pose = AgentPose::new(1.025, 2.025, 0.0, 0);
        let out = local_plan(&map, &pose, &frontier_goal_at(40, 40), &MotionParams::default(), &PlannerConfig::default());
        assert_eq!(out.action, Action::Forward);
        assert!((out.d_goal - 1.0).abs() < 1e-9);
    }

    #[test]
    fn goal_behind_turns_left_on_tie() {
        let map = open_map();
        let pose = AgentPose::new(2.025, 2.025, 0.0, 0);
        let out = local_plan(&map, &pose, &frontier_goal_at(40, 20), &MotionParams::default(), &PlannerConfig::default());
        assert_eq!(out.action, Action::TurnLeft);
        let pose = AgentPose::new(2.025, 2.025, 300.0, 0);
        let out = local_plan(&map, &pose, &frontier_goal_at(40, 20), &MotionParams::default(), &PlannerConfig::default());
        assert_eq!(out.action, Action::TurnLeft);
        let pose = AgentPose::new(2.025, 2.025, 60.0, 0);
        let out = local_plan(&map, &pose, &frontier_goal_at(40, 20), &MotionParams::default(), &PlannerConfig::default());
        assert_eq!(out.action, Action::TurnRight);
    }

    #[test]
    fn walled_off_goal_is_unreachable() {
        let mut map = open_map();
        for r in 0..80 {
            map.set(OBSTACLE, r, 60);
        }
        let pose = AgentPose::new(1.025, 2.025, 0.0, 0);
        let out = local_plan(&map, &pose, &frontier_goal_at(40, 70), &MotionParams::default(), &PlannerConfig::default());
        assert!(out.d_goal.is_infinite());
        assert_eq!(*out.path.last().unwrap(), (40, 59));
    }

    #[test]
    fn stops_near_detected_target() {
        let map = open_map();
        let pose = AgentPose::new(1.025, 2.025, 0.0, 0);
        let goal = LongTermGoal::new(40, 25, GoalSource::TargetOverride);
        let out = local_plan(&map, &pose, &goal, &MotionParams::default(), &PlannerConfig::default());
        assert_eq!(out.action, Action::Stop);
        let goal = LongTermGoal::new(40, 25, GoalSource::Frontier);
        let out = local_plan(&map, &pose, &goal, &MotionParams::default(), &PlannerConfig::default());
        assert_eq!(out.action, Action::Forward);
    }

    #[test]
    fn unknown_cells_cost_more() {
        let mut map = open_map();
        map.channel_mut(EXPLORED).fill(0);
        let pose = AgentPose::new(1.025, 2.025, 0.0, 0);
        let out = local_plan(&map, &pose, &frontier_goal_at(40, 30), &MotionParams::default(), &PlannerConfig::default());
        assert!((out.d_goal - 10.0 * 1.5 * 0.05).abs() < 1e-9);
    }
}
