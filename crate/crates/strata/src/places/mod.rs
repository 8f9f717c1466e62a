//! Phase 2a: terrain-aware place nodes.
//!
//! Terrain-labeled map points are rasterized into one occupancy grid per
//! terrain class, a 2D brushfire wavefront computes the distance field and
//! generalized Voronoi diagram of each grid, GVD cells are subsampled into
//! place nodes, and per-terrain graphs are linked through their edge nodes
//! into a single places layer. Each node carries the terrain class embedding
//! and a view embedding averaged from nearby in-view frames.

mod brushfire;
mod extract;
mod grid;

pub use brushfire::{brushfire_gvd, BrushfireField};
pub use extract::{extract_place_nodes, TerrainGraph};
pub use grid::{rasterize_terrain, Cell, OccupancyGrid};

use crate::core::{cosine_similarity, CoreError, Embedding, Vec3};
use crate::dataset::SceneDataset;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlacesError {
    #[error("invalid places config: {0}")]
    BadConfig(String),
    #[error("grid has no {0} cells")]
    DegenerateGrid(&'static str),
    #[error("dataset has no frames; cannot assign view embeddings")]
    NoFrames,
    #[error("terrain class {0} has no embedding in the dataset")]
    MissingTerrainEmbedding(u32),
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlacesConfig {
    /// Occupancy grid resolution in meters per cell.
    pub resolution: f64,
    /// Minimum spacing between same-terrain place nodes, meters.
    pub spacing: f64,
    /// Frames within this 2D radius of a node contribute to its view
    /// embedding, meters.
    pub view_radius: f64,
}

impl Default for PlacesConfig {
    fn default() -> Self {
        PlacesConfig {
            resolution: 0.5,
            spacing: 2.0,
            view_radius: 20.0,
        }
    }
}

impl PlacesConfig {
    pub fn validate(&self) -> Result<(), PlacesError> {
        if !(self.resolution > 0.0) {
            return Err(PlacesError::BadConfig("resolution must be positive".into()));
        }
        if !(self.spacing > 0.0) {
            return Err(PlacesError::BadConfig("spacing must be positive".into()));
        }
        if !(self.view_radius > 0.0) {
            return Err(PlacesError::BadConfig("view_radius must be positive".into()));
        }
        Ok(())
    }
}

/// A GVD-derived navigable waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceNode {
    pub id: u32,
    /// Grid-cell center, meters.
    pub position: (f64, f64),
    pub terrain: u32,
    /// Brushfire distance to the nearest obstacle cell, meters.
    pub clearance: f64,
    /// The dataset's terrain class embedding (empty until assigned).
    pub terrain_embedding: Embedding,
    /// Mean of in-view nearby frame embeddings (empty until assigned).
    pub view_embedding: Embedding,
}

/// Undirected places graph over all terrains.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlacesLayer {
    pub nodes: Vec<PlaceNode>,
    /// (node id, node id, Euclidean length in meters), id pairs ordered.
    pub edges: Vec<(u32, u32, f64)>,
}

impl PlacesLayer {
    pub fn node(&self, id: u32) -> Option<&PlaceNode> {
        self.nodes.get(id as usize)
    }

    pub fn degree(&self, id: u32) -> usize {
        self.edges
            .iter()
            .filter(|(a, b, _)| *a == id || *b == id)
            .count()
    }

    pub fn adjacency(&self) -> Vec<Vec<(u32, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b, len) in &self.edges {
            adj[a as usize].push((b, len));
            adj[b as usize].push((a, len));
        }
        for list in &mut adj {
            list.sort_by(|x, y| x.0.cmp(&y.0));
        }
        adj
    }

    pub fn connected_components(&self) -> Vec<Vec<u32>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes.len()];
        let mut components = Vec::new();
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start as u32];
            seen[start] = true;
            let mut stack = vec![start as u32];
            while let Some(v) = stack.pop() {
                for &(w, _) in &adj[v as usize] {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Id of the node nearest to `p` in 2D (ties: smaller id).
    pub fn nearest_node_xy(&self, p: &Vec3) -> Option<u32> {
        self.nodes
            .iter()
            .map(|n| {
                let dx = n.position.0 - p.x;
                let dy = n.position.1 - p.y;
                (dx * dx + dy * dy, n.id)
            })
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }
}

fn dist2d(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

/// Union the per-terrain graphs and connect edge nodes (degree <= 1,
/// including isolated nodes) to the nearest node of a different terrain.
/// If the result is still disconnected, nearest cross-component pairs are
/// linked until one component remains (cross-terrain pairs preferred).
/// A single-terrain input is returned unchanged.
pub fn connect_terrain_graphs(graphs: &[TerrainGraph]) -> PlacesLayer {
    let mut layer = PlacesLayer::default();
    for g in graphs {
        let offset = layer.nodes.len() as u32;
        for (i, (&pos, &clearance)) in g.positions.iter().zip(&g.clearances).enumerate() {
            layer.nodes.push(PlaceNode {
                id: offset + i as u32,
                position: pos,
                terrain: g.terrain,
                clearance,
                terrain_embedding: Embedding::new(Vec::new()),
                view_embedding: Embedding::new(Vec::new()),
            });
        }
        for &(a, b, len) in &g.edges {
            let (a, b) = (offset + a as u32, offset + b as u32);
            layer.edges.push((a.min(b), a.max(b), len));
        }
    }
    let terrains: std::collections::BTreeSet<u32> =
        layer.nodes.iter().map(|n| n.terrain).collect();
    if terrains.len() <= 1 {
        return layer;
    }

    let mut edge_set: std::collections::BTreeSet<(u32, u32)> =
        layer.edges.iter().map(|&(a, b, _)| (a, b)).collect();
    let mut degree = vec![0usize; layer.nodes.len()];
    for &(a, b, _) in &layer.edges {
        degree[a as usize] += 1;
        degree[b as usize] += 1;
    }
    let mut new_edges = Vec::new();
    for node in &layer.nodes {
        if degree[node.id as usize] > 1 {
            continue;
        }
        let target = layer
            .nodes
            .iter()
            .filter(|o| o.terrain != node.terrain)
            .map(|o| (dist2d(node.position, o.position), o.id))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        if let Some((len, target)) = target {
            let key = (node.id.min(target), node.id.max(target));
            if edge_set.insert(key) {
                new_edges.push((key.0, key.1, len));
            }
        }
    }
    layer.edges.extend(new_edges);

    // connectivity repair: edge-node linking alone cannot join components
    // whose nodes all have degree >= 2
    loop {
        let components = layer.connected_components();
        if components.len() <= 1 {
            break;
        }
        let comp_of = {
            let mut c = vec![0usize; layer.nodes.len()];
            for (k, comp) in components.iter().enumerate() {
                for &id in comp {
                    c[id as usize] = k;
                }
            }
            c
        };
        let mut best: Option<(bool, f64, u32, u32)> = None; // (!cross_terrain, dist, a, b)
        for a in &layer.nodes {
            for b in &layer.nodes {
                if b.id <= a.id || comp_of[a.id as usize] == comp_of[b.id as usize] {
                    continue;
                }
                let cand = (
                    a.terrain == b.terrain,
                    dist2d(a.position, b.position),
                    a.id,
                    b.id,
                );
                let better = match &best {
                    None => true,
                    Some(cur) => {
                        (cand.0, cand.1, cand.2, cand.3)
                            < (cur.0, cur.1, cur.2, cur.3)
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (_, len, a, b) = best.expect("multiple components imply a candidate pair");
        layer.edges.push((a, b, len));
    }
    layer
}

/// Assign both embeddings to every node. The view embedding is the unweighted
/// mean of whole-image embeddings of frames that are within `view_radius` of
/// the node (2D) and have the node inside their horizontal frustum. Fallbacks:
/// nearest in-view frame, then nearest frame by distance.
pub fn assign_place_embeddings(
    layer: &mut PlacesLayer,
    dataset: &SceneDataset,
    view_radius: f64,
) -> Result<(), PlacesError> {
    if dataset.frames.is_empty() {
        return Err(PlacesError::NoFrames);
    }
    struct FrameView {
        cam: (f64, f64),
        forward: (f64, f64),
        half_fov: f64,
        embedding: Embedding,
    }
    let views: Vec<FrameView> = dataset
        .frames
        .iter()
        .map(|f| {
            let fwd = f.pose.rotation.rotate(&Vec3::new(0.0, 0.0, 1.0));
            let norm = (fwd.x * fwd.x + fwd.y * fwd.y).sqrt();
            let forward = if norm > 1e-9 {
                (fwd.x / norm, fwd.y / norm)
            } else {
                (0.0, 0.0) // camera pointing straight up/down: nothing in view
            };
            FrameView {
                cam: (f.pose.translation.x, f.pose.translation.y),
                forward,
                half_fov: f.intrinsics.half_fov(),
                embedding: dataset
                    .embedding(&f.image_embedding_id)
                    .expect("validated on load")
                    .clone(),
            }
        })
        .collect();

    let in_view = |view: &FrameView, pos: (f64, f64)| -> bool {
        if view.forward == (0.0, 0.0) {
            return false;
        }
        let dx = pos.0 - view.cam.0;
        let dy = pos.1 - view.cam.1;
        let norm = (dx * dx + dy * dy).sqrt();
        if norm < 1e-9 {
            return true;
        }
        let cos_angle = (dx * view.forward.0 + dy * view.forward.1) / norm;
        cos_angle.clamp(-1.0, 1.0).acos() <= view.half_fov
    };

    for node in &mut layer.nodes {
        node.terrain_embedding = dataset
            .terrain_embedding(node.terrain)
            .ok_or(PlacesError::MissingTerrainEmbedding(node.terrain))?
            .clone();

        let qualifying: Vec<&FrameView> = views
            .iter()
            .filter(|v| dist2d(v.cam, node.position) <= view_radius && in_view(v, node.position))
            .collect();
        node.view_embedding = if !qualifying.is_empty() {
            Embedding::mean(qualifying.iter().map(|v| &v.embedding)).unwrap()
        } else {
            let fallback = views
                .iter()
                .enumerate()
                .filter(|(_, v)| in_view(v, node.position))
                .map(|(i, v)| (dist2d(v.cam, node.position), i))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let idx = match fallback {
                Some((_, i)) => i,
                None => {
                    views
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (dist2d(v.cam, node.position), i))
                        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
                        .unwrap()
                        .1
                }
            };
            views[idx].embedding.clone()
        };
    }
    Ok(())
}

/// Build the full places layer for every terrain class present in the map.
pub fn build_places_layer(
    map: &crate::fusion::SemanticGlobalMap,
    dataset: &SceneDataset,
    cfg: &PlacesConfig,
) -> Result<PlacesLayer, PlacesError> {
    let mut graphs = Vec::new();
    for class in &dataset.terrain_classes {
        let grid = rasterize_terrain(map, class.id, cfg.resolution);
        if grid.is_empty() {
            continue;
        }
        let field = match brushfire_gvd(&grid) {
            Ok(f) => f,
            Err(PlacesError::DegenerateGrid(_)) => continue,
            Err(e) => return Err(e),
        };
        graphs.push(extract_place_nodes(&grid, &field, cfg.spacing, class.id));
    }
    let mut layer = connect_terrain_graphs(&graphs);
    assign_place_embeddings(&mut layer, dataset, cfg.view_radius)?;
    Ok(layer)
}

/// place_pair-style semantic gap between two nodes' view embeddings.
pub fn view_similarity(a: &PlaceNode, b: &PlaceNode) -> Result<f64, CoreError> {
    cosine_similarity(&a.view_embedding, &b.view_embedding)
}
