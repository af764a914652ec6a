#![allow(dead_code)]
//! Independent reference implementations and fixtures shared by the
//! integration tests and the acceptance runner.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use objnav::eval::EpisodeResult;
use objnav::perception::{SemanticMap, EXPLORED, OBSTACLE};
use objnav::world::{AgentPose, EpisodeSpec, ObjectInstance, Scene};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Ordered-set Dijkstra over node ids. `edges(node, push)` lists arcs.
pub fn dijkstra(n: usize, sources: &[usize], mut edges: impl FnMut(usize, &mut dyn FnMut(usize, f64))) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    let mut open = BTreeSet::new();
    for &s in sources {
        dist[s] = 0.0;
        open.insert(Key(0.0, s));
    }
    while let Some(Key(d, u)) = open.pop_first() {
        let mut relax = |v: usize, w: f64| {
            let nd = d + w;
            if nd < dist[v] {
                if dist[v].is_finite() {
                    open.remove(&Key(dist[v], v));
                }
                dist[v] = nd;
                open.insert(Key(nd, v));
            }
        };
        edges(u, &mut relax);
    }
    dist
}

const MOVES: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

fn step_len(dr: i64, dc: i64) -> f64 {
    if dr != 0 && dc != 0 {
        2f64.sqrt()
    } else {
        1.0
    }
}

/// Reference geodesic distance from `from` to the nearest cell of
/// `category`, built straight from the character grids and stair links.
pub fn oracle_geodesic(scene: &Scene, from: &AgentPose, category: usize) -> f64 {
    let (w, h, nf) = (scene.width(), scene.height(), scene.floor_count());
    let plane = w * h;
    let grids: Vec<Vec<char>> = (0..nf)
        .map(|f| scene.floor_grid(f).iter().map(|k| k.to_char()).collect())
        .collect();
    let walkable = |f: usize, r: i64, c: i64| {
        r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w && grids[f][r as usize * w + c as usize] != '#'
    };
    let mut target = vec![false; plane * nf];
    for o in scene.objects().iter().filter(|o| o.category == category) {
        for &[r, c] in &o.cells {
            target[o.floor * plane + r * w + c] = true;
        }
    }
    let mut portal: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, l) in scene.stair_links().iter().enumerate() {
        for &[r, c] in &l.region_a {
            portal.insert((l.floor_a, r * w + c), i);
        }
        for &[r, c] in &l.region_b {
            portal.insert((l.floor_b, r * w + c), i);
        }
    }
    let links = scene.stair_links().to_vec();
    let Some((sr, sc)) = scene.cell_of(from.x, from.y) else { return f64::INFINITY };
    let start = from.floor * plane + sr * w + sc;
    if target[start] {
        return 0.0;
    }
    let dist = dijkstra(plane * nf, &[start], |u, push| {
        if target[u] {
            return;
        }
        let f = u / plane;
        let (r, c) = (((u % plane) / w) as i64, ((u % plane) % w) as i64);
        for (dr, dc) in MOVES {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                continue;
            }
            if dr != 0 && dc != 0 && !(walkable(f, r + dr, c) && walkable(f, r, c + dc)) {
                continue;
            }
            let flat = nr as usize * w + nc as usize;
            if target[f * plane + flat] {
                push(f * plane + flat, step_len(dr, dc));
                continue;
            }
            if !walkable(f, nr, nc) {
                continue;
            }
            let here = portal.get(&(f, (u % plane)));
            let there = portal.get(&(f, flat));
            let nf2 = match there {
                Some(&l) if here != Some(&l) => {
                    if links[l].floor_a == f {
                        links[l].floor_b
                    } else {
                        links[l].floor_a
                    }
                }
                _ => f,
            };
            push(nf2 * plane + flat, step_len(dr, dc));
        }
    });
    let best = (0..plane * nf).filter(|&i| target[i]).map(|i| dist[i]).fold(f64::INFINITY, f64::min);
    best * scene.cell_size()
}

/// Reference for the local planner's `d_goal`: the same cost model
/// (unknown cells cost `unknown_cost` to enter, obstacles blocked except
/// within `clearance` cells of the start or the goal, no corner cutting).
pub fn oracle_plan_cost(
    map: &SemanticMap,
    start: (i64, i64),
    goal: (i64, i64),
    unknown_cost: f64,
    clearance: i64,
) -> f64 {
    let m = map.size() as i64;
    let obstacle = map.channel(OBSTACLE);
    let explored = map.channel(EXPLORED);
    let near = |a: (i64, i64), b: (i64, i64)| (a.0 - b.0).abs() <= clearance && (a.1 - b.1).abs() <= clearance;
    let blocked = |r: i64, c: i64| obstacle[(r * m + c) as usize] != 0 && !near((r, c), start) && !near((r, c), goal);
    let inside = |r: i64, c: i64| r >= 0 && c >= 0 && r < m && c < m;
    let dist = dijkstra((m * m) as usize, &[(start.0 * m + start.1) as usize], |u, push| {
        let (r, c) = (u as i64 / m, u as i64 % m);
        for (dr, dc) in MOVES {
            let (nr, nc) = (r + dr, c + dc);
            if !inside(nr, nc) || blocked(nr, nc) {
                continue;
            }
            if dr != 0 && dc != 0 && (blocked(r + dr, c) || blocked(r, c + dc)) {
                continue;
            }
            let v = (nr * m + nc) as usize;
            let mult = if explored[v] == 0 { unknown_cost } else { 1.0 };
            push(v, step_len(dr, dc) * mult);
        }
    });
    dist[(goal.0 * m + goal.1) as usize] * map.cell_size()
}

/// Frontier clusters by definition: explored, free, 4-adjacent to an
/// unexplored cell; grouped 8-connected; small groups dropped.
pub fn oracle_frontiers(explored: &[Vec<bool>], obstacle: &[Vec<bool>], min_size: usize) -> BTreeSet<Vec<(usize, usize)>> {
    let m = explored.len();
    let is_f = |r: usize, c: usize| {
        if !explored[r][c] || obstacle[r][c] {
            return false;
        }
        let nb = [(r as i64 - 1, c as i64), (r as i64 + 1, c as i64), (r as i64, c as i64 - 1), (r as i64, c as i64 + 1)];
        nb.iter().any(|&(a, b)| a >= 0 && b >= 0 && (a as usize) < m && (b as usize) < m && !explored[a as usize][b as usize])
    };
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|r| (0..m).map(move |c| (r, c))).filter(|&(r, c)| is_f(r, c)).collect();
    // Union-find over frontier cells.
    let index: HashMap<(usize, usize), usize> = cells.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut parent: Vec<usize> = (0..cells.len()).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    for (i, &(r, c)) in cells.iter().enumerate() {
        for (dr, dc) in MOVES {
            let (a, b) = (r as i64 + dr, c as i64 + dc);
            if a < 0 || b < 0 {
                continue;
            }
            if let Some(&j) = index.get(&(a as usize, b as usize)) {
                let (x, y) = (root(&mut parent, i), root(&mut parent, j));
                parent[x] = y;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, &p) in cells.iter().enumerate() {
        let g = root(&mut parent, i);
        groups.entry(g).or_default().push(p);
    }
    groups
        .into_values()
        .filter(|g| g.len() >= min_size)
        .map(|mut g| {
            g.sort();
            g
        })
        .collect()
}

/// Cell-by-cell reference for map augmentation on the obstacle and
/// explored channels.
pub fn oracle_augment(
    explored: &[Vec<bool>],
    obstacle: &[Vec<bool>],
    min_blob: usize,
    radius: usize,
    hole_max: usize,
) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    let m = explored.len();
    let mut obs = obstacle.to_vec();
    let mut exp = explored.to_vec();
    let inside = |a: i64, b: i64| a >= 0 && b >= 0 && (a as usize) < m && (b as usize) < m;
    let flood = |seed: (usize, usize), member: &dyn Fn(usize, usize) -> bool, diag: bool, seen: &mut Vec<Vec<bool>>| {
        let mut out = vec![seed];
        seen[seed.0][seed.1] = true;
        let mut k = 0;
        while k < out.len() {
            let (r, c) = out[k];
            k += 1;
            for (dr, dc) in MOVES {
                if !diag && dr != 0 && dc != 0 {
                    continue;
                }
                let (a, b) = (r as i64 + dr, c as i64 + dc);
                if inside(a, b) && !seen[a as usize][b as usize] && member(a as usize, b as usize) {
                    seen[a as usize][b as usize] = true;
                    out.push((a as usize, b as usize));
                }
            }
        }
        out
    };
    if min_blob > 1 {
        let snapshot = obs.clone();
        let mut seen = vec![vec![false; m]; m];
        for r in 0..m {
            for c in 0..m {
                if snapshot[r][c] && !seen[r][c] {
                    let blob = flood((r, c), &|a, b| snapshot[a][b], true, &mut seen);
                    if blob.len() < min_blob {
                        for (a, b) in blob {
                            obs[a][b] = false;
                        }
                    }
                }
            }
        }
    }
    if radius > 0 {
        let snapshot = obs.clone();
        let rad = radius as i64;
        for r in 0..m {
            for c in 0..m {
                let mut any = false;
                for dr in -rad..=rad {
                    for dc in -rad..=rad {
                        let (a, b) = (r as i64 + dr, c as i64 + dc);
                        any |= inside(a, b) && snapshot[a as usize][b as usize];
                    }
                }
                obs[r][c] = any;
                if any {
                    exp[r][c] = true;
                }
            }
        }
    }
    if hole_max > 1 {
        let snapshot = exp.clone();
        let mut seen = vec![vec![false; m]; m];
        for r in 0..m {
            for c in 0..m {
                if !snapshot[r][c] && !seen[r][c] {
                    let region = flood((r, c), &|a, b| !snapshot[a][b], false, &mut seen);
                    let touches_border = region.iter().any(|&(a, b)| a == 0 || b == 0 || a == m - 1 || b == m - 1);
                    if !touches_border && region.len() < hole_max {
                        for (a, b) in region {
                            exp[a][b] = true;
                        }
                    }
                }
            }
        }
    }
    (exp, obs)
}

pub fn to_grid(map: &SemanticMap, ch: usize) -> Vec<Vec<bool>> {
    let m = map.size();
    (0..m).map(|r| (0..m).map(|c| map.get(ch, r, c)).collect()).collect()
}

pub fn from_grids(explored: &[Vec<bool>], obstacle: &[Vec<bool>], categories: usize) -> SemanticMap {
    let m = explored.len();
    let mut map = SemanticMap::new(categories, m, 0.05, (0.0, 0.0));
    for r in 0..m {
        for c in 0..m {
            if explored[r][c] {
                map.set(EXPLORED, r, c);
            }
            if obstacle[r][c] {
                map.set(OBSTACLE, r, c);
            }
        }
    }
    map
}

/// Random partially explored map with blob-like obstacles.
pub fn random_grids(rng: &mut ChaCha8Rng, m: usize) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    let p_exp = rng.gen_range(0.2..0.9);
    let p_obs = rng.gen_range(0.0..0.3);
    let mut explored = vec![vec![false; m]; m];
    let mut obstacle = vec![vec![false; m]; m];
    for r in 0..m {
        for c in 0..m {
            explored[r][c] = rng.gen_bool(p_exp);
            if explored[r][c] && rng.gen_bool(p_obs) {
                obstacle[r][c] = true;
            }
        }
    }
    (explored, obstacle)
}

/// Reference SR / SPL / DTS written from the metric definitions.
pub fn oracle_metrics(results: &[EpisodeResult], success_radius: f64) -> (f64, f64, f64) {
    let n = results.len() as f64;
    let mut sr = 0.0;
    let mut spl = 0.0;
    let mut dts = 0.0;
    for r in results {
        if r.success {
            sr += 1.0;
            let denom = if r.path_length > r.shortest { r.path_length } else { r.shortest };
            spl += r.shortest / denom;
        }
        let gap = r.final_distance - success_radius;
        dts += if gap > 0.0 { gap } else { 0.0 };
    }
    (sr / n, spl / n, dts / n)
}

pub fn random_result(rng: &mut ChaCha8Rng) -> EpisodeResult {
    let shortest = rng.gen_range(0.5..15.0);
    let success = rng.gen_bool(0.5);
    let path_length = if rng.gen_bool(0.1) { rng.gen_range(0.0..shortest) } else { shortest + rng.gen_range(0.0..30.0) };
    let final_distance = if success { rng.gen_range(0.0..1.0) } else { rng.gen_range(0.0..12.0) };
    EpisodeResult {
        spec: EpisodeSpec {
            scene_id: "s".into(),
            start: AgentPose::new(0.0, 0.0, 0.0, 0),
            goal_category: 0,
            shortest_distance: shortest,
            seed: 0,
        },
        success,
        stopped: success,
        path_length,
        shortest,
        steps_used: rng.gen_range(1..500),
        final_distance,
        final_pose: AgentPose::new(0.0, 0.0, 0.0, 0),
        failure_label: None,
        log: None,
    }
}

/// A 2 m room with a 1-cell-wide, 6-cell-deep dead end in its east wall.
/// A chair stands in the north-west corner of the room.
pub fn dead_end_scene() -> Scene {
    let (h, w) = (42usize, 48usize);
    let mut rows: Vec<Vec<char>> = vec![vec!['#'; w]; h];
    for row in rows.iter_mut().take(41).skip(1) {
        for cell in row.iter_mut().take(41).skip(1) {
            *cell = '.';
        }
    }
    for c in 41..=46 {
        rows[20][c] = '.';
    }
    for r in 5..8 {
        for c in 5..8 {
            rows[r][c] = '#';
        }
    }
    let rows: Vec<String> = rows.into_iter().map(|r| r.into_iter().collect()).collect();
    let chair = ObjectInstance { category: 0, floor: 0, cells: (5..8).flat_map(|r| (5..8).map(move |c| [r, c])).collect() };
    Scene::from_char_rows("dead-end", 0.05, &[rows], vec![chair], vec![]).expect("fixture scene is valid")
}

/// Start deep in the dead end, facing its closed end.
pub fn dead_end_spec(scene: &Scene) -> EpisodeSpec {
    let start = AgentPose::new(45.5 * 0.05, 20.5 * 0.05, 0.0, 0);
    let shortest = objnav::world::geodesic_distance(scene, &start, objnav::world::Target::Category(0));
    EpisodeSpec { scene_id: scene.id().into(), start, goal_category: 0, shortest_distance: shortest, seed: 1 }
}

pub fn in_dead_end(pose: &AgentPose) -> bool {
    pose.x >= 41.0 * 0.05
}

/// Two floors of open 3 m rooms joined by a stair strip along the east
/// side. Floor 1 has a pillar that floor 0 lacks.
pub fn two_floor_scene() -> Scene {
    let (h, w) = (40usize, 80usize);
    let mut floors = Vec::new();
    for f in 0..2 {
        let mut rows: Vec<Vec<char>> = vec![vec!['#'; w]; h];
        for row in rows.iter_mut().take(h - 1).skip(1) {
            for cell in row.iter_mut().take(60).skip(1) {
                *cell = '.';
            }
        }
        for row in rows.iter_mut().take(h - 1).skip(1) {
            for cell in row.iter_mut().take(78).skip(62) {
                *cell = 'S';
            }
        }
        // Floor 0 enters the strip at its north end, floor 1 leaves it at
        // the south end.
        let door = if f == 0 { 2..8 } else { 31..37 };
        for row in rows.iter_mut().take(door.end).skip(door.start) {
            row[60] = '.';
            row[61] = '.';
        }
        if f == 1 {
            for row in rows.iter_mut().take(25).skip(15) {
                for cell in row.iter_mut().take(35).skip(25) {
                    *cell = '#';
                }
            }
        }
        floors.push(rows.into_iter().map(|r| r.into_iter().collect::<String>()).collect::<Vec<_>>());
    }
    let region = |r0: usize, r1: usize| (r0..r1).flat_map(|r| (62..78).map(move |c| [r, c])).collect::<Vec<_>>();
    let link = objnav::world::StairLink { floor_a: 0, region_a: region(37, 39), floor_b: 1, region_b: region(1, 3) };
    let chair = ObjectInstance { category: 0, floor: 1, cells: vec![[10, 10], [10, 11], [11, 10], [11, 11]] };
    let mut floors = floors;
    for &[r, c] in &chair.cells {
        floors[1][r].replace_range(c..c + 1, "#");
    }
    Scene::from_char_rows("two-floor", 0.05, &floors, vec![chair], vec![link]).expect("fixture scene is valid")
}

/// Percentile bootstrap of the mean of `d`: `(mean, lo, hi)` at the given
/// two-sided confidence.
pub fn bootstrap_mean(d: &[f64], resamples: usize, confidence: f64, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let n = d.len();
    let mean = d.iter().sum::<f64>() / n as f64;
    let mut means: Vec<f64> =
        (0..resamples).map(|_| (0..n).map(|_| d[rng.gen_range(0..n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let lo = means[((resamples as f64) * tail).floor() as usize];
    let hi = means[(((resamples as f64) * (1.0 - tail)).ceil() as usize).min(resamples - 1)];
    (mean, lo, hi)
}
