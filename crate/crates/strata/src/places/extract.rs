//! Place node extraction from a GVD skeleton.

use super::brushfire::BrushfireField;
use super::grid::OccupancyGrid;

/// Nodes and intra-terrain edges for one terrain class, before global ids
/// are assigned.
#[derive(Debug, Clone)]
pub struct TerrainGraph {
    pub terrain: u32,
    /// World positions (cell centers), meters.
    pub positions: Vec<(f64, f64)>,
    pub clearances: Vec<f64>,
    /// Local index pairs plus Euclidean length.
    pub edges: Vec<(usize, usize, f64)>,
}

/// Greedily subsample the GVD skeleton: visit GVD cells in descending
/// clearance (ties: row-major cell order) and accept a cell as a node when no
/// accepted node lies within `spacing`. Edges connect node pairs within
/// `2 * spacing` whose straight grid segment stays on free cells.
pub fn extract_place_nodes(
    grid: &OccupancyGrid,
    field: &BrushfireField,
    spacing: f64,
    terrain: u32,
) -> TerrainGraph {
    let mut order: Vec<(usize, usize)> = field.gvd_cells.clone();
    order.sort_by(|&(ax, ay), &(bx, by)| {
        let da = field.distance[ay * grid.width + ax];
        let db = field.distance[by * grid.width + bx];
        db.partial_cmp(&da)
            .unwrap()
            .then_with(|| (ay * grid.width + ax).cmp(&(by * grid.width + bx)))
    });

    let mut cells: Vec<(usize, usize)> = Vec::new();
    let mut positions: Vec<(f64, f64)> = Vec::new();
    let mut clearances: Vec<f64> = Vec::new();
    for (x, y) in order {
        let pos = grid.cell_center(x, y);
        let close = positions
            .iter()
            .any(|&p| dist(p, pos) < spacing);
        if !close {
            cells.push((x, y));
            positions.push(pos);
            clearances.push(field.distance[y * grid.width + x]);
        }
    }

    let mut edges = Vec::new();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let len = dist(positions[i], positions[j]);
            if len <= 2.0 * spacing && line_of_sight(grid, cells[i], cells[j]) {
                edges.push((i, j, len));
            }
        }
    }
    TerrainGraph {
        terrain,
        positions,
        clearances,
        edges,
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

/// Bresenham walk between two cells; true when every visited cell is free.
fn line_of_sight(grid: &OccupancyGrid, a: (usize, usize), b: (usize, usize)) -> bool {
    let (mut x0, mut y0) = (a.0 as i64, a.1 as i64);
    let (x1, y1) = (b.0 as i64, b.1 as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if !grid.is_free(x0, y0) {
            return false;
        }
        if x0 == x1 && y0 == y1 {
            return true;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}
