use serde::{Deserialize, Serialize};

use super::map::SemanticMap;
use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// What a compressed map cell shows, in priority order from highest:
/// category, obstacle, explored free space, unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Unknown,
    Free,
    Obstacle,
    Category(usize),
}

impl CellClass {
    pub fn of(map: &SemanticMap, r: usize, c: usize) -> Self {
        if let Some(k) = map.top_category(r, c) {
            CellClass::Category(k)
        } else if map.is_obstacle(r, c) {
            CellClass::Obstacle
        } else if map.is_explored(r, c) {
            CellClass::Free
        } else {
            CellClass::Unknown
        }
    }

    /// Palette index used on the wire: 0 unknown, 1 free, 2 obstacle,
    /// `3 + k` for category `k`.
    pub fn index(self) -> u32 {
        match self {
            CellClass::Unknown => 0,
            CellClass::Free => 1,
            CellClass::Obstacle => 2,
            CellClass::Category(k) => 3 + k as u32,
        }
    }

    pub fn from_index(i: u32) -> Self {
        match i {
            0 => CellClass::Unknown,
            1 => CellClass::Free,
            2 => CellClass::Obstacle,
            k => CellClass::Category((k - 3) as usize),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Palette {
    pub unknown: Rgb,
    pub free: Rgb,
    pub obstacle: Rgb,
    pub categories: Vec<Rgb>,
}

const CATEGORY_COLORS: [Rgb; 20] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
    [128, 128, 0],
    [255, 215, 180],
    [0, 0, 128],
    [255, 225, 25],
    [0, 0, 0],
];

impl Palette {
    pub fn default_for(categories: usize) -> Self {
        let categories = (0..categories)
            .map(|k| match CATEGORY_COLORS.get(k) {
                Some(&rgb) => rgb,
                // Beyond the fixed list: walk a lattice that avoids the
                // reserved grays.
                None => {
                    let j = k - CATEGORY_COLORS.len();
                    [(j * 37 % 200) as u8 + 20, (j * 91 % 200) as u8 + 20, (j / 200 * 7 % 200) as u8 + 1]
                }
            })
            .collect();
        Self { unknown: [255, 255, 255], free: [230, 230, 230], obstacle: [100, 100, 100], categories }
    }

    pub fn color(&self, class: CellClass) -> Rgb {
        match class {
            CellClass::Unknown => self.unknown,
            CellClass::Free => self.free,
            CellClass::Obstacle => self.obstacle,
            CellClass::Category(k) => self.categories[k],
        }
    }

    pub fn class_of(&self, rgb: Rgb) -> Option<CellClass> {
        if rgb == self.unknown {
            Some(CellClass::Unknown)
        } else if rgb == self.free {
            Some(CellClass::Free)
        } else if rgb == self.obstacle {
            Some(CellClass::Obstacle)
        } else {
            self.categories.iter().position(|&c| c == rgb).map(CellClass::Category)
        }
    }

    pub fn validate(&self, categories: usize) -> Result<()> {
        if self.categories.len() < categories {
            return Err(Error::PaletteIncomplete(self.categories.len()));
        }
        let mut all: Vec<Rgb> = vec![self.unknown, self.free, self.obstacle];
        all.extend_from_slice(&self.categories[..categories]);
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::PaletteNotInjective);
        }
        Ok(())
    }
}

/// Three-channel rendering of a semantic map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedMap {
    pub size: usize,
    /// Row-major interleaved RGB.
    pub rgb: Vec<u8>,
}

impl CompressedMap {
    pub fn pixel(&self, r: usize, c: usize) -> Rgb {
        let i = 3 * (r * self.size + c);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    /// Per-cell classes recovered through the palette; `None` if a pixel
    /// is not a palette color.
    pub fn decompress(&self, palette: &Palette) -> Option<Vec<CellClass>> {
        self.rgb.chunks_exact(3).map(|p| palette.class_of([p[0], p[1], p[2]])).collect()
    }

    /// Binary portable pixmap (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.size, self.size).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }
}

pub fn compress_map(map: &SemanticMap, palette: &Palette) -> Result<CompressedMap> {
    palette.validate(map.categories())?;
    let m = map.size();
    let mut rgb = Vec::with_capacity(3 * m * m);
    for r in 0..m {
        for c in 0..m {
            rgb.extend_from_slice(&palette.color(CellClass::of(map, r, c)));
        }
    }
    Ok(CompressedMap { size: m, rgb })
}

/// Run-length encodes palette indices of a map in row-major order as
/// `[index, count]` pairs.
pub fn encode_runs(map: &SemanticMap) -> Vec<[u32; 2]> {
    let m = map.size();
    let mut runs: Vec<[u32; 2]> = Vec::new();
    for r in 0..m {
        for c in 0..m {
            let idx = CellClass::of(map, r, c).index();
            match runs.last_mut() {
                Some(last) if last[0] == idx => last[1] += 1,
                _ => runs.push([idx, 1]),
            }
        }
    }
    runs
}

pub fn decode_runs(runs: &[[u32; 2]]) -> Vec<CellClass> {
    runs.iter()
        .flat_map(|&[idx, n]| std::iter::repeat(CellClass::from_index(idx)).take(n as usize))
        .collect()
}
