use serde::{Deserialize, Serialize};

use super::map::SemanticMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierCluster {
    /// Member cells as `(row, col)`, in row-major discovery order.
    pub cells: Vec<(usize, usize)>,
    /// Mean `(row, col)` of the member cells.
    pub centroid: (f64, f64),
    pub size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontierSet {
    pub clusters: Vec<FrontierCluster>,
}

impl FrontierSet {
    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }
}

/// Explored, not an obstacle, and 4-adjacent to an in-bounds unknown cell.
pub fn is_frontier_cell(map: &SemanticMap, r: usize, c: usize) -> bool {
    if !map.is_explored(r, c) || map.is_obstacle(r, c) {
        return false;
    }
    let m = map.size();
    (r > 0 && !map.is_explored(r - 1, c))
        || (r + 1 < m && !map.is_explored(r + 1, c))
        || (c > 0 && !map.is_explored(r, c - 1))
        || (c + 1 < m && !map.is_explored(r, c + 1))
}

/// Frontier cells grouped into 8-connected clusters; clusters with fewer
/// than `min_cluster_size` cells are dropped.
pub fn extract_frontiers(map: &SemanticMap, min_cluster_size: usize) -> FrontierSet {
    let m = map.size();
    let explored = map.channel(super::EXPLORED);
    let obstacle = map.channel(super::OBSTACLE);
    let mut frontier = vec![false; m * m];
    for r in 0..m {
        for c in 0..m {
            let i = r * m + c;
            if explored[i] == 0 || obstacle[i] != 0 {
                continue;
            }
            frontier[i] = (r > 0 && explored[i - m] == 0)
                || (r + 1 < m && explored[i + m] == 0)
                || (c > 0 && explored[i - 1] == 0)
                || (c + 1 < m && explored[i + 1] == 0);
        }
    }

    let mut seen = vec![false; m * m];
    let mut clusters = Vec::new();
    let mut stack = Vec::new();
    for start in 0..m * m {
        if !frontier[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut cells = Vec::new();
        while let Some(i) = stack.pop() {
            let (r, c) = (i / m, i % m);
            cells.push((r, c));
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr as usize >= m || nc as usize >= m {
                        continue;
                    }
                    let j = nr as usize * m + nc as usize;
                    if frontier[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if cells.len() < min_cluster_size.max(1) {
            continue;
        }
        cells.sort_unstable();
        let n = cells.len() as f64;
        let (sr, sc) = cells.iter().fold((0.0, 0.0), |(a, b), &(r, c)| (a + r as f64, b + c as f64));
        clusters.push(FrontierCluster { size: cells.len(), centroid: (sr / n, sc / n), cells });
    }
    FrontierSet { clusters }
}
