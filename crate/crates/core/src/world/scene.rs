//! Ground-truth scene: multi-floor occupancy grids with object instances and
//! stair portals, plus the canonical JSON scene file format.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Grid row/column index.
pub type Cell = (usize, usize);

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Free,
    Obstacle,
    Stair,
}

impl CellKind {
    pub fn from_char(ch: char) -> Option<Self> {
        match ch {
            '.' => Some(CellKind::Free),
            '#' => Some(CellKind::Obstacle),
            'S' => Some(CellKind::Stair),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            CellKind::Free => '.',
            CellKind::Obstacle => '#',
            CellKind::Stair => 'S',
        }
    }

    #[inline]
    pub fn is_traversable(self) -> bool {
        !matches!(self, CellKind::Obstacle)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub category: usize,
    pub floor: usize,
    pub cells: Vec<[usize; 2]>,
}

/// A one-way pair of portal regions between two floors.
///
/// Entering a cell of `region_a` on `floor_a` (from a cell outside that region)
/// moves the agent to `floor_b` at the same planar position, and symmetrically
/// entering `region_b` on `floor_b` moves it to `floor_a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StairLink {
    pub floor_a: usize,
    pub region_a: Vec<[usize; 2]>,
    pub floor_b: usize,
    pub region_b: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    id: String,
    cell_size: f64,
    width: usize,
    height: usize,
    floors: Vec<Vec<String>>,
    objects: Vec<ObjectInstance>,
    stair_links: Vec<StairLink>,
}

/// Immutable ground-truth world. Shareable across threads.
#[derive(Debug, Clone)]
pub struct Scene {
    id: String,
    cell_size: f64,
    width: usize,
    height: usize,
    floors: Vec<Vec<CellKind>>,
    objects: Vec<ObjectInstance>,
    stair_links: Vec<StairLink>,
    // Per-floor lookup tables, row-major.
    object_at: Vec<Vec<u32>>,
    portal_at: Vec<Vec<u32>>,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.cell_size == other.cell_size
            && self.width == other.width
            && self.height == other.height
            && self.floors == other.floors
            && self.objects == other.objects
            && self.stair_links == other.stair_links
    }
}

impl Scene {
    /// Builds a scene and checks every structural invariant.
    pub fn new(
        id: impl Into<String>,
        cell_size: f64,
        width: usize,
        height: usize,
        floors: Vec<Vec<CellKind>>,
        objects: Vec<ObjectInstance>,
        stair_links: Vec<StairLink>,
    ) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::Invariant("cell_size must be positive".into()));
        }
        if width == 0 || height == 0 {
            return Err(Error::Invariant("grid dimensions must be nonzero".into()));
        }
        if floors.is_empty() {
            return Err(Error::Invariant("scene has no floors".into()));
        }
        for (f, grid) in floors.iter().enumerate() {
            if grid.len() != width * height {
                return Err(Error::Invariant(format!(
                    "floor {f} does not match the {width}x{height} grid dimensions"
                )));
            }
        }

        let n = width * height;
        let mut object_at = vec![vec![NONE; n]; floors.len()];
        for (i, obj) in objects.iter().enumerate() {
            if obj.floor >= floors.len() {
                return Err(Error::Invariant(format!(
                    "object {i} lies on nonexistent floor {}",
                    obj.floor
                )));
            }
            if obj.cells.is_empty() {
                return Err(Error::Invariant(format!("object {i} has no cells")));
            }
            for &[r, c] in &obj.cells {
                if r >= height || c >= width {
                    return Err(Error::Invariant(format!(
                        "object {i} cell ({r}, {c}) is outside the grid"
                    )));
                }
                let idx = r * width + c;
                if floors[obj.floor][idx] == CellKind::Stair {
                    return Err(Error::Invariant(format!(
                        "object {i} cell ({r}, {c}) lies on a stair cell"
                    )));
                }
                if object_at[obj.floor][idx] != NONE {
                    return Err(Error::Invariant(format!(
                        "object {i} overlaps another object at ({r}, {c})"
                    )));
                }
                object_at[obj.floor][idx] = i as u32;
            }
        }

        let mut portal_at = vec![vec![NONE; n]; floors.len()];
        for (i, link) in stair_links.iter().enumerate() {
            for (floor, region, other, name) in [
                (link.floor_a, &link.region_a, link.floor_b, "region_a"),
                (link.floor_b, &link.region_b, link.floor_a, "region_b"),
            ] {
                if floor >= floors.len() || other >= floors.len() {
                    return Err(Error::Invariant(format!(
                        "stair link {i} references a nonexistent floor"
                    )));
                }
                if floor == other {
                    return Err(Error::Invariant(format!(
                        "stair link {i} connects floor {floor} to itself"
                    )));
                }
                if region.is_empty() {
                    return Err(Error::Invariant(format!("stair link {i} {name} is empty")));
                }
                for &[r, c] in region {
                    if r >= height || c >= width {
                        return Err(Error::Invariant(format!(
                            "stair link {i} {name} cell ({r}, {c}) is outside the grid"
                        )));
                    }
                    let idx = r * width + c;
                    if floors[floor][idx] != CellKind::Stair {
                        return Err(Error::Invariant(format!(
                            "stair link {i} {name} cell ({r}, {c}) is not a stair cell on floor {floor}"
                        )));
                    }
                    if !floors[other][idx].is_traversable() {
                        return Err(Error::Invariant(format!(
                            "stair link {i} {name} cell ({r}, {c}) lands on an obstacle of floor {other}"
                        )));
                    }
                    if portal_at[floor][idx] != NONE && portal_at[floor][idx] != i as u32 {
                        return Err(Error::Invariant(format!(
                            "stair regions overlap at ({r}, {c}) on floor {floor}"
                        )));
                    }
                    portal_at[floor][idx] = i as u32;
                }
            }
        }

        Ok(Self {
            id: id.into(),
            cell_size,
            width,
            height,
            floors,
            objects,
            stair_links,
            object_at,
            portal_at,
        })
    }

    /// Builds a scene from per-floor row strings (`.`, `#`, `S`).
    pub fn from_char_rows(
        id: impl Into<String>,
        cell_size: f64,
        floors: &[Vec<String>],
        objects: Vec<ObjectInstance>,
        stair_links: Vec<StairLink>,
    ) -> Result<Self> {
        let height = floors.first().map_or(0, Vec::len);
        let width = floors.first().and_then(|f| f.first()).map_or(0, |r| r.chars().count());
        let mut grids = Vec::with_capacity(floors.len());
        for (f, rows) in floors.iter().enumerate() {
            let mut grid = Vec::with_capacity(width * height);
            for (r, row) in rows.iter().enumerate() {
                for (c, ch) in row.chars().enumerate() {
                    grid.push(CellKind::from_char(ch).ok_or_else(|| Error::Parse {
                        location: format!("floors[{f}][{r}] column {c}"),
                        message: format!("unknown grid character {ch:?}"),
                    })?);
                }
            }
            grids.push(grid);
        }
        Scene::new(id, cell_size, width, height, grids, objects, stair_links)
    }

    /// Raw grid of one floor, row-major.
    pub fn floor_grid(&self, floor: usize) -> &[CellKind] {
        &self.floors[floor]
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn floor_count(&self) -> usize {
        self.floors.len()
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    pub fn stair_links(&self) -> &[StairLink] {
        &self.stair_links
    }

    #[inline]
    pub fn in_bounds(&self, r: i64, c: i64) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.height && (c as usize) < self.width
    }

    #[inline]
    pub fn kind(&self, floor: usize, (r, c): Cell) -> CellKind {
        self.floors[floor][r * self.width + c]
    }

    /// Cell kind with out-of-grid positions treated as obstacles.
    #[inline]
    pub fn kind_or_wall(&self, floor: usize, r: i64, c: i64) -> CellKind {
        if self.in_bounds(r, c) {
            self.floors[floor][r as usize * self.width + c as usize]
        } else {
            CellKind::Obstacle
        }
    }

    #[inline]
    pub fn object_at(&self, floor: usize, (r, c): Cell) -> Option<&ObjectInstance> {
        match self.object_at[floor][r * self.width + c] {
            NONE => None,
            i => Some(&self.objects[i as usize]),
        }
    }

    /// Link index of the portal region containing `cell` on `floor`.
    #[inline]
    pub fn portal_link(&self, floor: usize, (r, c): Cell) -> Option<usize> {
        match self.portal_at[floor][r * self.width + c] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    /// Floor reached by entering `to` from `from` on `floor`.
    #[inline]
    pub fn floor_after_entering(&self, floor: usize, from: Cell, to: Cell) -> usize {
        match self.portal_link(floor, to) {
            Some(link) if self.portal_link(floor, from) != Some(link) => {
                let l = &self.stair_links[link];
                if l.floor_a == floor {
                    l.floor_b
                } else {
                    l.floor_a
                }
            }
            _ => floor,
        }
    }

    /// Cell containing a planar position, if inside the grid.
    #[inline]
    pub fn cell_of(&self, x: f64, y: f64) -> Option<Cell> {
        let c = (x / self.cell_size).floor();
        let r = (y / self.cell_size).floor();
        if self.in_bounds(r as i64, c as i64) && r >= 0.0 && c >= 0.0 {
            Some((r as usize, c as usize))
        } else {
            None
        }
    }

    /// Center of a cell in meters.
    #[inline]
    pub fn cell_center(&self, (r, c): Cell) -> (f64, f64) {
        ((c as f64 + 0.5) * self.cell_size, (r as f64 + 0.5) * self.cell_size)
    }

    /// All `(floor, cell)` pairs occupied by instances of `category`.
    pub fn category_cells(&self, category: usize) -> Vec<(usize, Cell)> {
        self.objects
            .iter()
            .filter(|o| o.category == category)
            .flat_map(|o| o.cells.iter().map(move |&[r, c]| (o.floor, (r, c))))
            .collect()
    }

    /// Sorted list of categories that have at least one instance.
    pub fn categories_present(&self) -> Vec<usize> {
        self.objects
            .iter()
            .map(|o| o.category)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if file.floors.is_empty() {
            return Err(Error::Invariant("scene has no floors".into()));
        }
        let mut floors = Vec::with_capacity(file.floors.len());
        for (f, rows) in file.floors.iter().enumerate() {
            if rows.len() != file.height {
                return Err(Error::Parse {
                    location: format!("floors[{f}]"),
                    message: format!("expected {} rows, found {}", file.height, rows.len()),
                });
            }
            let mut grid = Vec::with_capacity(file.width * file.height);
            for (r, row) in rows.iter().enumerate() {
                let before = grid.len();
                for (c, ch) in row.chars().enumerate() {
                    let kind = CellKind::from_char(ch).ok_or_else(|| Error::Parse {
                        location: format!("floors[{f}][{r}] column {c}"),
                        message: format!("unknown grid character {ch:?}"),
                    })?;
                    grid.push(kind);
                }
                if grid.len() - before != file.width {
                    return Err(Error::Parse {
                        location: format!("floors[{f}][{r}]"),
                        message: format!(
                            "expected {} columns, found {}",
                            file.width,
                            grid.len() - before
                        ),
                    });
                }
            }
            floors.push(grid);
        }
        Scene::new(
            file.id,
            file.cell_size,
            file.width,
            file.height,
            floors,
            file.objects,
            file.stair_links,
        )
    }

    /// Canonical serialization: sorted keys, two-space indent, LF endings.
    pub fn to_canonical_json(&self) -> String {
        let floors = self
            .floors
            .iter()
            .map(|grid| {
                grid.chunks(self.width)
                    .map(|row| row.iter().map(|k| k.to_char()).collect::<String>())
                    .collect::<Vec<_>>()
            })
            .collect();
        let file = SceneFile {
            id: self.id.clone(),
            cell_size: self.cell_size,
            width: self.width,
            height: self.height,
            floors,
            objects: self.objects.clone(),
            stair_links: self.stair_links.clone(),
        };
        let value = serde_json::to_value(&file).expect("scene is always serializable");
        canonical_json(&value)
    }
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let text = std::fs::read_to_string(path.as_ref())?;
    Scene::from_json_str(&text)
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), scene.to_canonical_json())?;
    Ok(())
}

/// Pretty-prints a JSON value with sorted keys and 2-space indentation.
/// Arrays containing only scalars stay on one line so cell lists remain compact.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    match value {
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                pad(out, indent + 1);
                let _ = write!(out, "{}: ", Value::String((*key).clone()));
                write_value(out, &map[*key], indent + 1);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push('}');
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(is_scalar) {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{item}");
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    pad(out, indent + 1);
                    write_value(out, item, indent + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push(']');
            }
        }
        scalar => {
            let _ = write!(out, "{scalar}");
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}
