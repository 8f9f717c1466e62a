//! Per-terrain 2D occupancy grids over the semantic global map.

use crate::fusion::SemanticGlobalMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    /// At least one point of this terrain class projects into the cell.
    Free,
    Obstacle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    /// World coordinates of the grid's (0,0) cell corner, meters.
    pub origin: (f64, f64),
    /// Meters per cell.
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major, `cells[y * width + x]`.
    pub cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn cell(&self, x: usize, y: usize) -> Cell {
        self.cells[y * self.width + x]
    }

    pub fn is_free(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.cell(x as usize, y as usize) == Cell::Free
    }

    /// World coordinates of a cell's center.
    pub fn cell_center(&self, x: usize, y: usize) -> (f64, f64) {
        (
            self.origin.0 + (x as f64 + 0.5) * self.resolution,
            self.origin.1 + (y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == Cell::Free).count()
    }
}

/// Rasterize the terrain-labeled map points of one class onto a 2D grid
/// (z dropped). The grid covers the points' bounding rectangle padded by one
/// cell; a cell is FREE iff at least one point of the class falls into it.
pub fn rasterize_terrain(
    map: &SemanticGlobalMap,
    terrain: u32,
    resolution: f64,
) -> OccupancyGrid {
    assert!(resolution > 0.0);
    let cells_of_class: Vec<(i64, i64)> = map
        .points
        .iter()
        .filter(|p| p.terrain == Some(terrain))
        .map(|p| {
            (
                (p.position.x / resolution).floor() as i64,
                (p.position.y / resolution).floor() as i64,
            )
        })
        .collect();
    if cells_of_class.is_empty() {
        return OccupancyGrid {
            origin: (0.0, 0.0),
            resolution,
            width: 0,
            height: 0,
            cells: Vec::new(),
        };
    }
    let min_x = cells_of_class.iter().map(|c| c.0).min().unwrap() - 1;
    let max_x = cells_of_class.iter().map(|c| c.0).max().unwrap() + 1;
    let min_y = cells_of_class.iter().map(|c| c.1).min().unwrap() - 1;
    let max_y = cells_of_class.iter().map(|c| c.1).max().unwrap() + 1;
    let width = (max_x - min_x + 1) as usize;
    let height = (max_y - min_y + 1) as usize;
    let mut cells = vec![Cell::Obstacle; width * height];
    for (cx, cy) in cells_of_class {
        let x = (cx - min_x) as usize;
        let y = (cy - min_y) as usize;
        cells[y * width + x] = Cell::Free;
    }
    OccupancyGrid {
        origin: (min_x as f64 * resolution, min_y as f64 * resolution),
        resolution,
        width,
        height,
        cells,
    }
}
