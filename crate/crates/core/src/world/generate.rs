//! Procedural multi-floor floorplans: a corridor with rooms on both sides,
//! furniture-like object blocks, and stair strips linking adjacent floors.
//!
//! Stair strips sit in bands beside the main footprint (right band for the
//! 0-1 pair, left band for 1-2). On the lower floor a strip opens onto the
//! corridor at its top end; on the upper floor it opens onto the adjoining
//! room at its bottom end. Walking the strip end to end crosses a portal
//! region and changes floors.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scene::{CellKind, ObjectInstance, Scene, StairLink};
use crate::error::{Error, Result};

const WALL: usize = 2;
const MAX_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateParams {
    pub floors: usize,
    pub rooms_per_floor: usize,
    /// Meters.
    pub corridor_width: f64,
    /// Meters.
    pub door_width: f64,
    /// Extra objects per 5 m² of room floor, on top of one instance per category.
    pub object_density: f64,
    /// Chance that an object close to a wall keeps a 1-2 cell sliver to it
    /// instead of touching it.
    pub narrow_gap_prob: f64,
    pub categories: usize,
    pub rng_seed: u64,
    /// Main footprint, meters.
    pub width: f64,
    pub height: f64,
    pub cell_size: f64,
    pub stair_width: f64,
    pub stair_length: f64,
}

impl Default for GenerateParams {
    fn default() -> Self {
        Self {
            floors: 1,
            rooms_per_floor: 4,
            corridor_width: 1.2,
            door_width: 0.9,
            object_density: 1.0,
            narrow_gap_prob: 0.2,
            categories: 6,
            rng_seed: 0,
            width: 10.0,
            height: 8.0,
            cell_size: 0.05,
            stair_width: 1.0,
            stair_length: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    r0: usize,
    r1: usize,
    c0: usize,
    c1: usize,
}

impl Rect {
    fn area(&self) -> usize {
        (self.r1 - self.r0) * (self.c1 - self.c0)
    }
}

struct FloorPlan {
    grid: Vec<CellKind>,
    keepout: Vec<bool>,
    rooms: Vec<Rect>,
}

struct Builder {
    w: usize,
    h: usize,
}

impl Builder {
    fn fill(&self, plan: &mut FloorPlan, rect: Rect, kind: CellKind) {
        for r in rect.r0..rect.r1 {
            for c in rect.c0..rect.c1 {
                plan.grid[r * self.w + c] = kind;
            }
        }
    }

    /// Carves an opening and reserves a clearance zone around it.
    fn door(&self, plan: &mut FloorPlan, rect: Rect, clearance: usize) {
        self.fill(plan, rect, CellKind::Free);
        let r0 = rect.r0.saturating_sub(clearance);
        let c0 = rect.c0.saturating_sub(clearance);
        let r1 = (rect.r1 + clearance).min(self.h);
        let c1 = (rect.c1 + clearance).min(self.w);
        for r in r0..r1 {
            for c in c0..c1 {
                plan.keepout[r * self.w + c] = true;
            }
        }
    }
}

pub fn generate_scene(params: &GenerateParams) -> Result<Scene> {
    validate(params)?;
    let mut last_reason = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let seed = params.rng_seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match try_generate(params, seed) {
            Ok(scene) => return Ok(scene),
            Err(reason) => last_reason = reason,
        }
    }
    Err(Error::GenerationFailed { attempts: MAX_ATTEMPTS, reason: last_reason })
}

fn validate(p: &GenerateParams) -> Result<()> {
    if p.floors == 0 {
        return Err(Error::NonPositive("floors"));
    }
    if p.floors > 3 {
        return Err(Error::Config("at most 3 floors are supported".into()));
    }
    if p.rooms_per_floor == 0 {
        return Err(Error::NonPositive("rooms_per_floor"));
    }
    if p.categories == 0 {
        return Err(Error::NonPositive("categories"));
    }
    for (name, v) in [
        ("corridor_width", p.corridor_width),
        ("door_width", p.door_width),
        ("width", p.width),
        ("height", p.height),
        ("cell_size", p.cell_size),
        ("stair_width", p.stair_width),
        ("stair_length", p.stair_length),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositive(name));
        }
    }
    if !(0.0..=1.0).contains(&p.narrow_gap_prob) {
        return Err(Error::Config("narrow_gap_prob must be in [0, 1]".into()));
    }
    if !(p.object_density >= 0.0) {
        return Err(Error::Config("object_density must be >= 0".into()));
    }
    Ok(())
}

fn cells(m: f64, cs: f64) -> usize {
    ((m / cs).round() as usize).max(1)
}

fn try_generate(p: &GenerateParams, seed: u64) -> std::result::Result<Scene, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs = p.cell_size;
    let main_w = cells(p.width, cs);
    let h = cells(p.height, cs);
    let cw = cells(p.corridor_width, cs);
    let dw = cells(p.door_width, cs);
    let sw = cells(p.stair_width, cs);
    let band_w = sw + 2 * WALL;
    let min_room = cells(1.2, cs);
    let clearance = cells(0.5, cs);

    let left_band = p.floors >= 3;
    let right_band = p.floors >= 2;
    let main_c0 = if left_band { band_w } else { 0 };
    let w = main_w + band_w * (usize::from(left_band) + usize::from(right_band));
    let b = Builder { w, h };

    if main_w < 2 * WALL + min_room || h < 2 * WALL + cw + 2 {
        return Err("footprint too small".into());
    }

    // Corridor rows are shared by every floor so stair openings line up.
    let lo = WALL + WALL + min_room;
    let hi = (h.saturating_sub(cw)) / 2;
    let cr0 = if p.rooms_per_floor == 1 {
        WALL + (h - 2 * WALL).saturating_sub(cw) / 4
    } else {
        if hi < lo {
            return Err("footprint too short for corridor and rooms".into());
        }
        rng.gen_range(lo..=hi)
    };
    let interior = Rect { r0: WALL, r1: h - WALL, c0: main_c0 + WALL, c1: main_c0 + main_w - WALL };

    let mut plans = Vec::with_capacity(p.floors);
    for _ in 0..p.floors {
        let mut plan =
            FloorPlan { grid: vec![CellKind::Obstacle; w * h], keepout: vec![false; w * h], rooms: vec![] };
        if p.rooms_per_floor == 1 {
            b.fill(&mut plan, interior, CellKind::Free);
            plan.rooms.push(interior);
        } else {
            let corridor = Rect { r0: cr0, r1: cr0 + cw, c0: interior.c0, c1: interior.c1 };
            b.fill(&mut plan, corridor, CellKind::Free);
            let n_top = (p.rooms_per_floor + 1) / 2;
            let n_bot = p.rooms_per_floor / 2;
            let bands = [
                (n_top, WALL, cr0 - WALL, true),
                (n_bot, cr0 + cw + WALL, h - WALL, false),
            ];
            for (count, r0, r1, above) in bands {
                if count == 0 {
                    continue;
                }
                if r1 <= r0 || r1 - r0 < min_room {
                    return Err("room band too short".into());
                }
                let spans = split_span(&mut rng, interior.c0, interior.c1, count, min_room)
                    .ok_or("room band too narrow")?;
                for (c0, c1) in spans {
                    let room = Rect { r0, r1, c0, c1 };
                    b.fill(&mut plan, room, CellKind::Free);
                    plan.rooms.push(room);
                    let door_w = dw.min(c1 - c0);
                    let dc = rng.gen_range(c0..=c1 - door_w);
                    let (dr0, dr1) = if above { (cr0 - WALL, cr0) } else { (cr0 + cw, cr0 + cw + WALL) };
                    b.door(&mut plan, Rect { r0: dr0, r1: dr1, c0: dc, c1: dc + door_w }, clearance);
                }
            }
        }
        plans.push(plan);
    }

    let mut links = Vec::new();
    for pair in 0..p.floors.saturating_sub(1) {
        let (lower, upper) = (pair, pair + 1);
        let on_right = pair % 2 == 0;
        let band_c0 = if on_right { main_c0 + main_w } else { 0 };
        let strip_c = (band_c0 + WALL, band_c0 + WALL + sw);
        let s0 = cr0;
        let sl = cells(p.stair_length, cs).min(h - WALL - s0);
        let open_w = cw.min(dw).max(1);
        if sl < open_w + cw + WALL + 2 {
            return Err("no room for stairs".into());
        }
        let strip = Rect { r0: s0, r1: s0 + sl, c0: strip_c.0, c1: strip_c.1 };
        let gap = if on_right {
            (main_c0 + main_w - WALL, strip_c.0)
        } else {
            (strip_c.1, main_c0 + WALL)
        };
        for f in [lower, upper] {
            b.fill(&mut plans[f], strip, CellKind::Stair);
        }
        let top_open = Rect { r0: s0, r1: s0 + cw.min(sl), c0: gap.0, c1: gap.1 };
        let bottom_open = Rect { r0: s0 + sl - open_w, r1: s0 + sl, c0: gap.0, c1: gap.1 };
        if p.rooms_per_floor > 1 && bottom_open.r0 < cr0 + cw + WALL {
            return Err("stair landing misses the lower rooms".into());
        }
        b.door(&mut plans[lower], top_open, clearance);
        b.door(&mut plans[upper], bottom_open, clearance);
        let region = |r0: usize, r1: usize| -> Vec<[usize; 2]> {
            (r0..r1).flat_map(|r| (strip.c0..strip.c1).map(move |c| [r, c])).collect()
        };
        links.push(StairLink {
            floor_a: lower,
            region_a: region(s0 + sl - WALL, s0 + sl),
            floor_b: upper,
            region_b: region(s0, s0 + WALL),
        });
    }

    let mut objects: Vec<ObjectInstance> = Vec::new();
    if p.object_density > 0.0 {
        for category in 0..p.categories {
            let mut placed = false;
            for _ in 0..400 {
                let f = rng.gen_range(0..p.floors);
                let room = plans[f].rooms[rng.gen_range(0..plans[f].rooms.len())];
                if let Some(obj) = place_object(&mut rng, &b, &mut plans[f], room, category, f, cs, p.narrow_gap_prob) {
                    objects.push(obj);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(format!("could not place category {category}"));
            }
        }
        for f in 0..p.floors {
            let rooms = plans[f].rooms.clone();
            for room in rooms {
                let area_m2 = room.area() as f64 * cs * cs;
                let expected = p.object_density * area_m2 / 5.0;
                let mut count = expected.floor() as usize;
                if rng.gen::<f64>() < expected.fract() {
                    count += 1;
                }
                for _ in 0..count {
                    let category = rng.gen_range(0..p.categories);
                    for _ in 0..20 {
                        if let Some(obj) = place_object(&mut rng, &b, &mut plans[f], room, category, f, cs, p.narrow_gap_prob) {
                            objects.push(obj);
                            break;
                        }
                    }
                }
            }
        }
    }

    let floors = plans.into_iter().map(|pl| pl.grid).collect();
    Scene::new(format!("gen-{}", p.rng_seed), cs, w, h, floors, objects, links).map_err(|e| e.to_string())
}

/// Splits `[lo, hi)` into `count` spans separated by wall-thick gaps.
fn split_span(rng: &mut ChaCha8Rng, lo: usize, hi: usize, count: usize, min: usize) -> Option<Vec<(usize, usize)>> {
    let total = hi.checked_sub(lo)?.checked_sub((count - 1) * WALL)?;
    if total < count * min {
        return None;
    }
    let slack = total - count * min;
    let mut cuts: Vec<usize> = (0..count - 1).map(|_| rng.gen_range(0..=slack)).collect();
    cuts.sort_unstable();
    let mut spans = Vec::with_capacity(count);
    let mut start = lo;
    let mut prev = 0;
    for i in 0..count {
        let extra = if i + 1 < count { cuts[i] - prev } else { slack - prev };
        if i + 1 < count {
            prev = cuts[i];
        }
        let end = start + min + extra;
        spans.push((start, end));
        start = end + WALL;
    }
    Some(spans)
}

fn place_object(
    rng: &mut ChaCha8Rng,
    b: &Builder,
    plan: &mut FloorPlan,
    room: Rect,
    category: usize,
    floor: usize,
    cs: f64,
    narrow_gap_prob: f64,
) -> Option<ObjectInstance> {
    let min_side = cells(0.3, cs);
    let max_side = cells(0.8, cs);
    let gap = cells(0.4, cs);
    let oh = rng.gen_range(min_side..=max_side);
    let ow = rng.gen_range(min_side..=max_side);
    if room.r1 - room.r0 < oh + 2 || room.c1 - room.c0 < ow + 2 {
        return None;
    }
    let mut r0 = rng.gen_range(room.r0..=room.r1 - oh);
    let mut c0 = rng.gen_range(room.c0..=room.c1 - ow);
    // Snap to a wall when close to it, optionally leaving a sliver.
    let sliver = |rng: &mut ChaCha8Rng| {
        if narrow_gap_prob > 0.0 && rng.gen::<f64>() < narrow_gap_prob {
            rng.gen_range(1..=2)
        } else {
            0
        }
    };
    if r0 - room.r0 < gap {
        r0 = room.r0 + sliver(rng);
    } else if room.r1 - (r0 + oh) < gap {
        r0 = room.r1 - oh - sliver(rng);
    }
    if c0 - room.c0 < gap {
        c0 = room.c0 + sliver(rng);
    } else if room.c1 - (c0 + ow) < gap {
        c0 = room.c1 - ow - sliver(rng);
    }
    let rect = Rect { r0, r1: r0 + oh, c0, c1: c0 + ow };

    let er0 = rect.r0.saturating_sub(gap).max(room.r0);
    let er1 = (rect.r1 + gap).min(room.r1);
    let ec0 = rect.c0.saturating_sub(gap).max(room.c0);
    let ec1 = (rect.c1 + gap).min(room.c1);
    for r in er0..er1 {
        for c in ec0..ec1 {
            let i = r * b.w + c;
            if plan.grid[i] != CellKind::Free || plan.keepout[i] {
                return None;
            }
        }
    }

    b.fill(plan, rect, CellKind::Obstacle);
    if !is_connected(&plan.grid, b.w, b.h) {
        b.fill(plan, rect, CellKind::Free);
        return None;
    }
    let cells = (rect.r0..rect.r1).flat_map(|r| (rect.c0..rect.c1).map(move |c| [r, c])).collect();
    Some(ObjectInstance { category, floor, cells })
}

/// Whether all traversable cells of a grid form one 4-connected component.
pub fn is_connected(grid: &[CellKind], w: usize, h: usize) -> bool {
    let total = grid.iter().filter(|k| k.is_traversable()).count();
    let Some(start) = grid.iter().position(|k| k.is_traversable()) else {
        return true;
    };
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 0;
    while let Some(i) = queue.pop_front() {
        count += 1;
        let (r, c) = (i / w, i % w);
        let mut push = |j: usize| {
            if !seen[j] && grid[j].is_traversable() {
                seen[j] = true;
                queue.push_back(j);
            }
        };
        if r > 0 {
            push(i - w);
        }
        if r + 1 < h {
            push(i + w);
        }
        if c > 0 {
            push(i - 1);
        }
        if c + 1 < w {
            push(i + 1);
        }
    }
    count == total
}
