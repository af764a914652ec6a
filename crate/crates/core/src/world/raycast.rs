//! Grid ray traversal shared by sensing, motion and map projection.

use super::scene::{Cell, CellKind, Scene};

/// Walks the cells pierced by a ray, in order, using an exact voxel
/// traversal. `visit(row, col, t_enter)` is called first for the starting
/// cell (with `t_enter = 0`) and then for every cell entered before
/// `max_dist`. Returning `false` from `visit` stops the walk.
///
/// When the ray passes exactly through a cell corner the horizontal
/// neighbour is visited before the diagonal one, so consecutive cells are
/// always 4-adjacent.
pub fn traverse(
    x: f64,
    y: f64,
    angle_deg: f64,
    cell_size: f64,
    max_dist: f64,
    mut visit: impl FnMut(i64, i64, f64) -> bool,
) {
    let (dy, dx) = angle_deg.to_radians().sin_cos();
    let mut col = (x / cell_size).floor() as i64;
    let mut row = (y / cell_size).floor() as i64;
    if !visit(row, col, 0.0) {
        return;
    }

    let step_c: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_r: i64 = if dy > 0.0 { 1 } else { -1 };
    let (mut t_max_x, t_delta_x) = if dx.abs() < 1e-12 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let boundary = if dx > 0.0 { (col + 1) as f64 * cell_size } else { col as f64 * cell_size };
        ((boundary - x) / dx, cell_size / dx.abs())
    };
    let (mut t_max_y, t_delta_y) = if dy.abs() < 1e-12 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let boundary = if dy > 0.0 { (row + 1) as f64 * cell_size } else { row as f64 * cell_size };
        ((boundary - y) / dy, cell_size / dy.abs())
    };

    loop {
        if t_max_x <= t_max_y {
            let t = t_max_x;
            if t >= max_dist {
                return;
            }
            col += step_c;
            t_max_x += t_delta_x;
            if !visit(row, col, t) {
                return;
            }
            if t_max_y == t {
                row += step_r;
                t_max_y += t_delta_y;
                if !visit(row, col, t) {
                    return;
                }
            }
        } else {
            let t = t_max_y;
            if t >= max_dist {
                return;
            }
            row += step_r;
            t_max_y += t_delta_y;
            if !visit(row, col, t) {
                return;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Floor on which the blocking cell was met.
    pub floor: usize,
    /// Blocking cell; `None` when the ray left the grid.
    pub cell: Option<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCast {
    /// Free range along the ray, capped at the requested maximum.
    pub distance: f64,
    pub hit: Option<RayHit>,
    /// Floor of the last free cell reached.
    pub end_floor: usize,
    /// The ray was stopped where it would have changed floors.
    pub at_portal: bool,
}

/// Casts a ray through the scene, following stair portals.
pub fn cast(scene: &Scene, floor: usize, x: f64, y: f64, heading_deg: f64, max_dist: f64) -> RayCast {
    cast_impl(scene, floor, x, y, heading_deg, max_dist, true)
}

/// Like [`cast`] but stops without a return where the ray would change
/// floors: a camera looking up a stair sees the steps, not the floor above.
pub fn cast_view(scene: &Scene, floor: usize, x: f64, y: f64, heading_deg: f64, max_dist: f64) -> RayCast {
    cast_impl(scene, floor, x, y, heading_deg, max_dist, false)
}

fn cast_impl(
    scene: &Scene,
    floor: usize,
    x: f64,
    y: f64,
    heading_deg: f64,
    max_dist: f64,
    follow_portals: bool,
) -> RayCast {
    let mut current_floor = floor;
    let mut prev: Option<Cell> = None;
    let mut result = RayCast { distance: max_dist, hit: None, end_floor: floor, at_portal: false };
    traverse(x, y, heading_deg, scene.cell_size(), max_dist, |r, c, t| {
        if !scene.in_bounds(r, c) {
            if t > 0.0 {
                result.distance = t;
                result.hit = Some(RayHit { floor: current_floor, cell: None });
                return false;
            }
            return true;
        }
        let cell = (r as usize, c as usize);
        if let Some(p) = prev {
            if scene.kind(current_floor, cell) == CellKind::Obstacle {
                result.distance = t;
                result.hit = Some(RayHit { floor: current_floor, cell: Some(cell) });
                return false;
            }
            let next = scene.floor_after_entering(current_floor, p, cell);
            if next != current_floor && !follow_portals {
                result.distance = t;
                result.at_portal = true;
                return false;
            }
            current_floor = next;
        }
        prev = Some(cell);
        true
    });
    result.end_floor = current_floor;
    result
}

/// Floor the agent stands on after sliding `dist` meters along a ray that
/// is known to be free over that length.
pub fn floor_after_moving(scene: &Scene, floor: usize, x: f64, y: f64, heading_deg: f64, dist: f64) -> usize {
    let (dy, dx) = heading_deg.to_radians().sin_cos();
    let target = scene.cell_of(x + dist * dx, y + dist * dy);
    let mut current_floor = floor;
    let mut prev: Option<Cell> = None;
    let mut at_target = floor;
    traverse(x, y, heading_deg, scene.cell_size(), dist + 1e-9, |r, c, _| {
        if !scene.in_bounds(r, c) {
            return false;
        }
        let cell = (r as usize, c as usize);
        if let Some(p) = prev {
            if !scene.kind(current_floor, cell).is_traversable() {
                return false;
            }
            current_floor = scene.floor_after_entering(current_floor, p, cell);
        }
        prev = Some(cell);
        if Some(cell) == target {
            at_target = current_floor;
        }
        true
    });
    at_target
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells(x: f64, y: f64, angle: f64, max: f64) -> Vec<(i64, i64, f64)> {
        let mut v = Vec::new();
        traverse(x, y, angle, 1.0, max, |r, c, t| {
            v.push((r, c, t));
            true
        });
        v
    }

    #[test]
    fn horizontal_ray_visits_row() {
        let v = cells(0.5, 0.5, 0.0, 3.0);
        let rc: Vec<_> = v.iter().map(|&(r, c, _)| (r, c)).collect();
        assert_eq!(rc, vec![(0, 0), (0, 1), (0, 2), (0, 3)]);
        assert!((v[1].2 - 0.5).abs() < 1e-12);
        assert!((v[3].2 - 2.5).abs() < 1e-12);
    }

    #[test]
    fn diagonal_through_corners_stays_four_connected() {
        let v = cells(0.5, 0.5, 45.0, 3.0);
        for w in v.windows(2) {
            let d = (w[0].0 - w[1].0).abs() + (w[0].1 - w[1].1).abs();
            assert_eq!(d, 1, "{:?}", v);
        }
    }

    #[test]
    fn negative_direction() {
        let v = cells(2.5, 0.5, 180.0, 2.0);
        let rc: Vec<_> = v.iter().map(|&(r, c, _)| (r, c)).collect();
        assert_eq!(rc, vec![(0, 2), (0, 1), (0, 0)]);
    }
}
