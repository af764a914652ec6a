use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::map::{SemanticMap, EXPLORED, OBSTACLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// 8-connected obstacle blobs with fewer cells are removed.
    pub denoise_min_blob: usize,
    /// Chebyshev radius of the square dilation applied to obstacles.
    pub obstacle_dilation_cells: usize,
    /// Enclosed unexplored regions with fewer cells are marked explored.
    pub hole_fill_max: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { denoise_min_blob: 0, obstacle_dilation_cells: 1, hole_fill_max: 50 }
    }
}

impl AugmentConfig {
    pub const IDENTITY: Self = Self { denoise_min_blob: 0, obstacle_dilation_cells: 0, hole_fill_max: 0 };
}

/// Reusable scratch space for repeated augmentation of same-size maps.
#[derive(Debug, Default)]
pub struct Augmenter {
    mark: Vec<u32>,
    epoch: u32,
    component: Vec<usize>,
    queue: VecDeque<usize>,
    tmp: Vec<u8>,
    labels: Vec<u32>,
    parent: Vec<u32>,
    sizes: Vec<usize>,
    open: Vec<bool>,
}

/// Returns an augmented copy of `map`: denoise, dilate, then fill holes.
/// Category channels are copied unchanged.
pub fn augment_map(map: &SemanticMap, config: &AugmentConfig) -> SemanticMap {
    let mut out = map.clone();
    Augmenter::default().apply(&mut out, config);
    out
}

impl Augmenter {
    /// Copies `src` into `dst` and augments `dst` in place.
    pub fn augment_into(&mut self, src: &SemanticMap, dst: &mut SemanticMap, config: &AugmentConfig) {
        dst.copy_from(src);
        self.apply(dst, config);
    }

    pub fn apply(&mut self, map: &mut SemanticMap, config: &AugmentConfig) {
        let m = map.size();
        if self.mark.len() != m * m {
            self.mark = vec![0; m * m];
            self.epoch = 0;
        }
        // Everything outside the box is unexplored and obstacle-free, so no
        // operation can change it. Its edge sits one cell beyond the reach
        // of dilation, which keeps a ring of open unknown around the work.
        let Some(bbox) = touched_bbox(map) else { return };
        let work = bbox.grow(config.obstacle_dilation_cells + 1, m);
        if config.denoise_min_blob > 1 {
            self.denoise(map, &work, config.denoise_min_blob);
        }
        if config.obstacle_dilation_cells > 0 {
            self.dilate(map, &work, config.obstacle_dilation_cells);
        }
        if config.hole_fill_max > 1 {
            self.fill_holes(map, &work, config.hole_fill_max);
        }
    }

    fn next_epoch(&mut self) -> u32 {
        if self.epoch == u32::MAX {
            self.mark.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.epoch
    }

    fn denoise(&mut self, map: &mut SemanticMap, work: &Window, min_blob: usize) {
        let m = map.size();
        self.next_epoch();
        let epoch = self.epoch;
        for start in work.cells(m) {
            if map.channel(OBSTACLE)[start] == 0 || self.mark[start] == epoch {
                continue;
            }
            let obstacle = map.channel(OBSTACLE);
            self.component.clear();
            self.queue.clear();
            self.mark[start] = epoch;
            self.queue.push_back(start);
            while let Some(i) = self.queue.pop_front() {
                self.component.push(i);
                let (r, c) = ((i / m) as i64, (i % m) as i64);
                for dr in -1..=1i64 {
                    for dc in -1..=1i64 {
                        let (nr, nc) = (r + dr, c + dc);
                        if nr < 0 || nc < 0 || nr as usize >= m || nc as usize >= m {
                            continue;
                        }
                        let j = nr as usize * m + nc as usize;
                        if self.mark[j] != epoch && obstacle[j] != 0 {
                            self.mark[j] = epoch;
                            self.queue.push_back(j);
                        }
                    }
                }
            }
            if self.component.len() < min_blob {
                let ch = map.channel_mut(OBSTACLE);
                for &i in &self.component {
                    ch[i] = 0;
                }
            }
        }
    }

    fn dilate(&mut self, map: &mut SemanticMap, work: &Window, radius: usize) {
        let m = map.size();
        self.tmp.clear();
        self.tmp.resize(m * m, 0);
        // Separable square dilation: rows into `tmp`, then columns back.
        {
            let obstacle = map.channel(OBSTACLE);
            for r in work.r0..=work.r1 {
                for c in work.c0..=work.c1 {
                    if obstacle[r * m + c] != 0 {
                        let lo = c.saturating_sub(radius);
                        let hi = (c + radius).min(m - 1);
                        self.tmp[r * m + lo..=r * m + hi].fill(1);
                    }
                }
            }
        }
        let ch = map.channel_mut(OBSTACLE);
        for r in work.r0..=work.r1 {
            ch[r * m + work.c0..=r * m + work.c1].fill(0);
        }
        for r in work.r0..=work.r1 {
            for c in work.c0..=work.c1 {
                if self.tmp[r * m + c] != 0 {
                    let lo = r.saturating_sub(radius);
                    let hi = (r + radius).min(m - 1);
                    for rr in lo..=hi {
                        ch[rr * m + c] = 1;
                    }
                }
            }
        }
        let (obstacle, explored) = map.obstacle_and_explored_mut();
        for i in work.cells(m) {
            explored[i] |= obstacle[i];
        }
    }

    /// Two-pass 4-connected labelling of unexplored cells in the window. A
    /// component reaching the window edge reaches the map border through
    /// the unexplored space around the window.
    fn fill_holes(&mut self, map: &mut SemanticMap, work: &Window, max_size: usize) {
        let m = map.size();
        let (h, w) = (work.r1 - work.r0 + 1, work.c1 - work.c0 + 1);
        const NONE: u32 = u32::MAX;
        self.labels.clear();
        self.labels.resize(h * w, NONE);
        self.parent.clear();
        let explored = map.channel(EXPLORED);
        for i in 0..h {
            for j in 0..w {
                if explored[(work.r0 + i) * m + work.c0 + j] != 0 {
                    continue;
                }
                let up = if i > 0 { self.labels[(i - 1) * w + j] } else { NONE };
                let left = if j > 0 { self.labels[i * w + j - 1] } else { NONE };
                let label = match (up, left) {
                    (NONE, NONE) => {
                        self.parent.push(self.parent.len() as u32);
                        self.parent.len() as u32 - 1
                    }
                    (a, NONE) | (NONE, a) => a,
                    (a, b) => {
                        let (ra, rb) = (find(&mut self.parent, a), find(&mut self.parent, b));
                        self.parent[ra.max(rb) as usize] = ra.min(rb);
                        ra.min(rb)
                    }
                };
                self.labels[i * w + j] = label;
            }
        }
        let n = self.parent.len();
        self.sizes.clear();
        self.sizes.resize(n, 0);
        self.open.clear();
        self.open.resize(n, false);
        for i in 0..h {
            for j in 0..w {
                let l = self.labels[i * w + j];
                if l == NONE {
                    continue;
                }
                let root = find(&mut self.parent, l) as usize;
                self.labels[i * w + j] = root as u32;
                self.sizes[root] += 1;
                if i == 0 || j == 0 || i == h - 1 || j == w - 1 {
                    self.open[root] = true;
                }
            }
        }
        let explored = map.channel_mut(EXPLORED);
        for i in 0..h {
            for j in 0..w {
                let l = self.labels[i * w + j];
                if l != NONE && !self.open[l as usize] && self.sizes[l as usize] < max_size {
                    explored[(work.r0 + i) * m + work.c0 + j] = 1;
                }
            }
        }
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let up = parent[parent[x as usize] as usize];
        parent[x as usize] = up;
        x = up;
    }
    x
}

/// Inclusive cell window.
#[derive(Debug, Clone, Copy)]
struct Window {
    r0: usize,
    r1: usize,
    c0: usize,
    c1: usize,
}

impl Window {
    fn grow(self, by: usize, m: usize) -> Self {
        Self {
            r0: self.r0.saturating_sub(by),
            r1: (self.r1 + by).min(m - 1),
            c0: self.c0.saturating_sub(by),
            c1: (self.c1 + by).min(m - 1),
        }
    }

    fn cells(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        (self.r0..=self.r1).flat_map(move |r| (self.c0..=self.c1).map(move |c| r * m + c))
    }
}

/// Bounds of the cells that are explored or obstacle.
fn touched_bbox(map: &SemanticMap) -> Option<Window> {
    let m = map.size();
    let (obstacle, explored) = (map.channel(OBSTACLE), map.channel(EXPLORED));
    let mut out: Option<Window> = None;
    for r in 0..m {
        let row = r * m..(r + 1) * m;
        let hit = |i: &usize| explored[*i] != 0 || obstacle[*i] != 0;
        let Some(first) = row.clone().find(hit) else { continue };
        let last = row.rev().find(hit).unwrap_or(first);
        let (first, last) = (first - r * m, last - r * m);
        out = Some(match out {
            None => Window { r0: r, r1: r, c0: first, c1: last },
            Some(w) => Window { r0: w.r0, r1: r, c0: w.c0.min(first), c1: w.c1.max(last) },
        });
    }
    out
}
