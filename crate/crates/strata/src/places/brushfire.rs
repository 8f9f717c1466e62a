//! Brushfire distance transform and generalized Voronoi diagram on an
//! occupancy grid.
//!
//! A wavefront expands from every obstacle cell over the 8-connected free
//! cells, propagating the coordinates of the originating obstacle cell.
//! Each free cell ends up with (approximately exact) Euclidean distance to
//! its nearest obstacle. GVD cells are where wavefronts from non-adjacent
//! obstacles meet: either an equal-distance collision was observed during
//! expansion, or a neighboring free cell's nearest obstacle is not adjacent
//! to this cell's.

use super::grid::{Cell, OccupancyGrid};
use super::PlacesError;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
pub struct BrushfireField {
    /// Distance to the nearest obstacle in meters; 0 for obstacle cells.
    pub distance: Vec<f64>,
    /// Grid coordinates of the nearest obstacle cell.
    pub source: Vec<(i64, i64)>,
    /// Row-major flags marking GVD cells.
    pub gvd: Vec<bool>,
    /// (x, y) of each GVD cell, row-major order.
    pub gvd_cells: Vec<(usize, usize)>,
}

struct QueueEntry {
    dist: f64,
    cell: usize,
    source: (i64, i64),
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.cell == other.cell
    }
}
impl Eq for QueueEntry {}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueEntry {
    // min-heap on (dist, cell)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

const NEIGHBORS: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn chebyshev(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn euclid_cells(a: (i64, i64), b: (i64, i64)) -> f64 {
    let dx = (a.0 - b.0) as f64;
    let dy = (a.1 - b.1) as f64;
    (dx * dx + dy * dy).sqrt()
}

/// Compute the brushfire distance field and GVD of a grid. Errors when the
/// grid is all-free or all-obstacle.
pub fn brushfire_gvd(grid: &OccupancyGrid) -> Result<BrushfireField, PlacesError> {
    let n = grid.width * grid.height;
    let free_count = grid.free_count();
    if free_count == 0 {
        return Err(PlacesError::DegenerateGrid("FREE"));
    }
    if free_count == n {
        return Err(PlacesError::DegenerateGrid("OBSTACLE"));
    }

    let mut dist = vec![f64::INFINITY; n];
    let mut source = vec![(i64::MIN, i64::MIN); n];
    let mut collision = vec![false; n];
    let mut heap = BinaryHeap::new();

    for y in 0..grid.height {
        for x in 0..grid.width {
            let idx = y * grid.width + x;
            if grid.cell(x, y) == Cell::Obstacle {
                dist[idx] = 0.0;
                source[idx] = (x as i64, y as i64);
                heap.push(QueueEntry {
                    dist: 0.0,
                    cell: idx,
                    source: (x as i64, y as i64),
                });
            }
        }
    }

    while let Some(entry) = heap.pop() {
        let idx = entry.cell;
        if entry.dist > dist[idx] + 1e-9 {
            continue;
        }
        let x = (idx % grid.width) as i64;
        let y = (idx / grid.width) as i64;
        for (dx, dy) in NEIGHBORS {
            let (nx, ny) = (x + dx, y + dy);
            if !grid.is_free(nx, ny) {
                continue;
            }
            let nidx = ny as usize * grid.width + nx as usize;
            let cand = euclid_cells((nx, ny), entry.source);
            if cand + 1e-12 < dist[nidx] {
                dist[nidx] = cand;
                source[nidx] = entry.source;
                collision[nidx] = false;
                heap.push(QueueEntry {
                    dist: cand,
                    cell: nidx,
                    source: entry.source,
                });
            } else if (cand - dist[nidx]).abs() <= 1e-9
                && chebyshev(entry.source, source[nidx]) > 1
            {
                // an equally near wavefront from a non-adjacent obstacle
                collision[nidx] = true;
            }
        }
    }

    let mut gvd = vec![false; n];
    let mut gvd_cells = Vec::new();
    for y in 0..grid.height {
        for x in 0..grid.width {
            let idx = y * grid.width + x;
            if grid.cell(x, y) != Cell::Free || dist[idx] < 1.0 - 1e-9 {
                continue;
            }
            let mut is_gvd = collision[idx];
            if !is_gvd {
                for (dx, dy) in NEIGHBORS {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if !grid.is_free(nx, ny) {
                        continue;
                    }
                    let nidx = ny as usize * grid.width + nx as usize;
                    if dist[nidx] >= 1.0 - 1e-9 && chebyshev(source[idx], source[nidx]) > 1 {
                        is_gvd = true;
                        break;
                    }
                }
            }
            if is_gvd {
                gvd[idx] = true;
                gvd_cells.push((x, y));
            }
        }
    }

    let res = grid.resolution;
    for d in &mut dist {
        *d *= res;
    }
    Ok(BrushfireField {
        distance: dist,
        source,
        gvd,
        gvd_cells,
    })
}
