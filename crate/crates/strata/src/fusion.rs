//! Phase 1: build the task-agnostic semantic global map.
//!
//! LiDAR points are projected into per-frame mask polygons, each mask's 3D
//! points are filtered to their largest DBSCAN cluster, and the surviving
//! points are merged into a sparse voxelized map. Every map point keeps a
//! deduplicated set of embedding slots with assignment counts: a new
//! embedding whose cosine similarity to an existing slot reaches the dedup
//! threshold increments that slot instead of being stored again.

use crate::core::{cosine_similarity, CameraIntrinsics, CoreError, Embedding, Vec3};
use crate::dataset::{DatasetError, MaskRecord, SceneDataset};
use crate::dbscan::dbscan;
use crate::geom::point_in_polygon;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("mask {mask} references embedding {id:?} absent from the dataset")]
    MissingEmbedding { mask: usize, id: String },
    #[error("invalid fusion config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Cosine similarity at or above which an incoming embedding is merged
    /// into an existing slot.
    pub dedup_threshold: f64,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    /// Scan-to-map association radius; `None` means "equal to voxel_leaf".
    pub assoc_radius: Option<f64>,
    pub voxel_leaf: f64,
    pub max_range: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            dedup_threshold: 0.9,
            dbscan_eps: 0.5,
            dbscan_min_pts: 5,
            assoc_radius: None,
            voxel_leaf: 0.5,
            max_range: 100.0,
        }
    }
}

impl FusionConfig {
    pub fn assoc_radius(&self) -> f64 {
        self.assoc_radius.unwrap_or(self.voxel_leaf)
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold <= 1.0) {
            return Err(FusionError::BadConfig(format!(
                "dedup_threshold {} outside (0,1]",
                self.dedup_threshold
            )));
        }
        for (name, v) in [
            ("dbscan_eps", self.dbscan_eps),
            ("voxel_leaf", self.voxel_leaf),
            ("max_range", self.max_range),
            ("assoc_radius", self.assoc_radius()),
        ] {
            if !(v > 0.0) {
                return Err(FusionError::BadConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dbscan_min_pts == 0 {
            return Err(FusionError::BadConfig("dbscan_min_pts must be >= 1".into()));
        }
        Ok(())
    }
}

/// One deduplicated embedding with its assignment count. Stored vectors are
/// immutable; repeats only increment `count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub embedding: Embedding,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub position: Vec3,
    pub slots: Vec<Slot>,
    pub terrain: Option<u32>,
}

/// Sparse voxelized point cloud where each point carries deduplicated
/// embedding slots. At most one point per voxel cell.
#[derive(Debug, Clone)]
pub struct SemanticGlobalMap {
    pub voxel_leaf: f64,
    pub embedding_dim: usize,
    pub points: Vec<MapPoint>,
    voxel_index: HashMap<(i64, i64, i64), usize>,
}

impl PartialEq for SemanticGlobalMap {
    fn eq(&self, other: &Self) -> bool {
        self.voxel_leaf == other.voxel_leaf
            && self.embedding_dim == other.embedding_dim
            && self.points == other.points
    }
}

impl SemanticGlobalMap {
    pub fn new(voxel_leaf: f64, embedding_dim: usize) -> Self {
        SemanticGlobalMap {
            voxel_leaf,
            embedding_dim,
            points: Vec::new(),
            voxel_index: HashMap::new(),
        }
    }

    /// Rebuild the voxel index from `points` (used after deserialization).
    pub fn from_points(voxel_leaf: f64, embedding_dim: usize, points: Vec<MapPoint>) -> Self {
        let mut map = SemanticGlobalMap {
            voxel_leaf,
            embedding_dim,
            points,
            voxel_index: HashMap::new(),
        };
        for i in 0..map.points.len() {
            let key = map.voxel_key(&map.points[i].position);
            map.voxel_index.insert(key, i);
        }
        map
    }

    pub fn voxel_key(&self, p: &Vec3) -> (i64, i64, i64) {
        (
            (p.x / self.voxel_leaf).floor() as i64,
            (p.y / self.voxel_leaf).floor() as i64,
            (p.z / self.voxel_leaf).floor() as i64,
        )
    }

    pub fn voxel_center(&self, key: (i64, i64, i64)) -> Vec3 {
        Vec3::new(
            (key.0 as f64 + 0.5) * self.voxel_leaf,
            (key.1 as f64 + 0.5) * self.voxel_leaf,
            (key.2 as f64 + 0.5) * self.voxel_leaf,
        )
    }

    /// Index of the nearest map point within `radius` of `p`, ties broken by
    /// smallest point index.
    pub fn nearest_within(&self, p: &Vec3, radius: f64) -> Option<usize> {
        let reach = (radius / self.voxel_leaf).ceil() as i64;
        let (kx, ky, kz) = self.voxel_key(p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(&i) = self.voxel_index.get(&(kx + dx, ky + dy, kz + dz)) {
                        let d = self.points[i].position.dist(p);
                        if d <= radius {
                            let better = match best {
                                None => true,
                                Some((bd, bi)) => d < bd || (d == bd && i < bi),
                            };
                            if better {
                                best = Some((d, i));
                            }
                        }
                    }
                }
            }
        }
        best.map(|(_, i)| i)
    }

    pub fn total_slots(&self) -> usize {
        self.points.iter().map(|p| p.slots.len()).sum()
    }

    pub fn total_assignments(&self) -> u64 {
        self.points
            .iter()
            .flat_map(|p| p.slots.iter().map(|s| s.count))
            .sum()
    }
}

/// A LiDAR point successfully projected into the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    /// Index into the input point slice.
    pub index: usize,
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Pinhole-project sensor-frame points into the image plane. Points behind
/// the camera, outside the image bounds, or beyond `max_range` are dropped.
/// Camera convention: +z forward, +x right, +y down.
pub fn project_points(
    points: &[Vec3],
    intr: &CameraIntrinsics,
    max_range: f64,
) -> Vec<ProjectedPoint> {
    let mut out = Vec::new();
    for (index, p) in points.iter().enumerate() {
        if p.z <= 0.0 || p.norm() > max_range {
            continue;
        }
        let u = intr.fx * p.x / p.z + intr.cx;
        let v = intr.fy * p.y / p.z + intr.cy;
        if u >= 0.0 && u < intr.width as f64 && v >= 0.0 && v < intr.height as f64 {
            out.push(ProjectedPoint {
                index,
                u,
                v,
                depth: p.z,
            });
        }
    }
    out
}

/// Assign projected points to masks by point-in-polygon (boundary inside).
/// A point inside both a terrain mask and a non-terrain mask is assigned to
/// the terrain mask(s) only. Returns, per mask, the `index` values of the
/// assigned points.
pub fn associate_masks(projected: &[ProjectedPoint], masks: &[MaskRecord]) -> Vec<Vec<usize>> {
    let mut result: Vec<Vec<usize>> = vec![Vec::new(); masks.len()];
    for p in projected {
        let mut hits: Vec<usize> = Vec::new();
        let mut any_terrain = false;
        for (m, mask) in masks.iter().enumerate() {
            if point_in_polygon((p.u, p.v), &mask.polygon) {
                hits.push(m);
                any_terrain |= mask.terrain.is_some();
            }
        }
        for m in hits {
            if !any_terrain || masks[m].terrain.is_some() {
                result[m].push(p.index);
            }
        }
    }
    result
}

/// DBSCAN over world-frame points; returns the member indices of the largest
/// cluster (ties broken by the cluster containing the smallest index). Noise
/// is never returned.
pub fn largest_cluster_filter(points: &[Vec3], cfg: &FusionConfig) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let result = dbscan(points, cfg.dbscan_eps, cfg.dbscan_min_pts);
    result
        .clusters
        .into_iter()
        .max_by(|a, b| {
            a.len()
                .cmp(&b.len())
                .then_with(|| b.first().cmp(&a.first()))
        })
        .unwrap_or_default()
}

/// How a map point's slot set is resolved into a single embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolveMode {
    /// Count-weighted mean of all slot vectors.
    Avg,
    /// The vector of the most frequently assigned slot (ties: earliest slot).
    Max,
}

pub fn resolve_point_embedding(p: &MapPoint, mode: ResolveMode) -> Result<Embedding, CoreError> {
    let first = p
        .slots
        .first()
        .ok_or(CoreError::NonFinite("map point with no slots"))?;
    match mode {
        ResolveMode::Max => {
            let mut best = first;
            for slot in &p.slots[1..] {
                if slot.count > best.count {
                    best = slot;
                }
            }
            Ok(best.embedding.clone())
        }
        ResolveMode::Avg => {
            let mut acc = vec![0.0; first.embedding.dim()];
            let mut total = 0u64;
            for slot in &p.slots {
                for (a, v) in acc.iter_mut().zip(&slot.embedding.values) {
                    *a += v * slot.count as f64;
                }
                total += slot.count;
            }
            let inv = 1.0 / total as f64;
            Ok(Embedding::new(acc.into_iter().map(|a| a * inv).collect()))
        }
    }
}

/// Merge one frame's world-frame points into the map. Each point goes to the
/// nearest map point within the association radius, or creates a new map
/// point at its voxel center. Terrain labels stick on first assignment.
pub fn merge_frame(
    map: &mut SemanticGlobalMap,
    frame_points: &[(Vec3, &Embedding, Option<u32>)],
    cfg: &FusionConfig,
) -> Result<(), FusionError> {
    let radius = cfg.assoc_radius();
    for (pos, embedding, terrain) in frame_points {
        if embedding.dim() != map.embedding_dim {
            return Err(FusionError::Core(CoreError::DimensionMismatch(
                map.embedding_dim,
                embedding.dim(),
            )));
        }
        let target = match map.nearest_within(pos, radius) {
            Some(i) => i,
            None => {
                let key = map.voxel_key(pos);
                match map.voxel_index.get(&key) {
                    Some(&i) => i, // voxel already occupied (radius < half-diagonal)
                    None => {
                        let i = map.points.len();
                        map.points.push(MapPoint {
                            position: map.voxel_center(key),
                            slots: Vec::new(),
                            terrain: None,
                        });
                        map.voxel_index.insert(key, i);
                        i
                    }
                }
            }
        };
        add_embedding(&mut map.points[target], embedding, cfg.dedup_threshold)?;
        if map.points[target].terrain.is_none() {
            map.points[target].terrain = *terrain;
        }
    }
    Ok(())
}

fn add_embedding(point: &mut MapPoint, e: &Embedding, threshold: f64) -> Result<(), FusionError> {
    let mut best: Option<(f64, usize)> = None;
    for (i, slot) in point.slots.iter().enumerate() {
        let sim = cosine_similarity(e, &slot.embedding)?;
        if best.map_or(true, |(bs, _)| sim > bs) {
            best = Some((sim, i));
        }
    }
    match best {
        Some((sim, i)) if sim >= threshold => point.slots[i].count += 1,
        _ => point.slots.push(Slot {
            embedding: e.clone(),
            count: 1,
        }),
    }
    Ok(())
}

/// Run the full Phase 1 pipeline over a dataset: project, associate, filter
/// each mask to its largest cluster, and merge in timestamp order.
pub fn build_map(dataset: &SceneDataset, cfg: &FusionConfig) -> Result<SemanticGlobalMap, FusionError> {
    cfg.validate()?;
    let mut map = SemanticGlobalMap::new(cfg.voxel_leaf, dataset.embedding_dim);
    for frame in &dataset.frames {
        let lidar = dataset.load_lidar(frame)?;
        let projected = project_points(&lidar, &frame.intrinsics, cfg.max_range);
        let assignments = associate_masks(&projected, &frame.masks);
        for (m, mask) in frame.masks.iter().enumerate() {
            let indices = &assignments[m];
            if indices.is_empty() {
                continue;
            }
            let world: Vec<Vec3> = indices
                .iter()
                .map(|&i| crate::core::transform_point(&lidar[i], &frame.pose))
                .collect();
            let kept = largest_cluster_filter(&world, cfg);
            if kept.is_empty() {
                continue;
            }
            let embedding = dataset
                .embedding(&mask.embedding_id)
                .ok_or_else(|| FusionError::MissingEmbedding {
                    mask: m,
                    id: mask.embedding_id.clone(),
                })?;
            let frame_points: Vec<(Vec3, &Embedding, Option<u32>)> = kept
                .iter()
                .map(|&k| (world[k], embedding, mask.terrain))
                .collect();
            merge_frame(&mut map, &frame_points, cfg)?;
        }
    }
    Ok(map)
}
