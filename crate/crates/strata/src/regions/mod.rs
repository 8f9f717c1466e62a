//! Phase 2b: hierarchical region layers over place nodes.
//!
//! Two clustering routes build a [`RegionHierarchy`]: average-linkage
//! agglomerative clustering cut at fixed distance thresholds (always four
//! levels), and recursive spectral bisection with semantic-difference and
//! bounding-box-area stopping rules (variable depth). A batch agglomerative
//! information bottleneck clusterer is provided as an evaluation baseline.

mod agglomerative;
mod aib;
mod spectral;

pub use agglomerative::agglomerative_regions;
pub use aib::aib_regions_baseline;
pub use spectral::{spectral_regions, SpectralStop};

use crate::core::{cosine_similarity, CoreError, Embedding};
use crate::places::{PlaceNode, PlacesLayer};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("places layer is empty")]
    NoPlaces,
    #[error("place node {0} has no view embedding; run embedding assignment first")]
    MissingEmbedding(u32),
    #[error("invalid region config: {0}")]
    BadConfig(String),
    #[error("requested {requested} clusters but only {available} place nodes exist")]
    TooManyClusters { requested: usize, available: usize },
    #[error("no task embeddings provided")]
    NoTasks,
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionConfig {
    /// Scale converting semantic dissimilarity to meters-equivalent.
    pub lambda_semantic: f64,
    /// Dendrogram cut heights, meters-equivalent, strictly increasing.
    pub agglo_thresholds: Vec<f64>,
    /// Spectral recursion stops when a cluster's semantic spread is at or
    /// below this value.
    pub spectral_sem_diff_max: f64,
    /// ... or when its axis-aligned 2D bounding box area is at or below
    /// this, in square meters.
    pub spectral_area_max: f64,
    pub linkage: Linkage,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            lambda_semantic: 50.0,
            agglo_thresholds: vec![50.0, 100.0, 200.0, 400.0],
            spectral_sem_diff_max: 0.1,
            spectral_area_max: 2500.0,
            linkage: Linkage::Average,
        }
    }
}

impl RegionConfig {
    pub fn validate(&self) -> Result<(), RegionError> {
        if self.lambda_semantic <= 0.0 {
            return Err(RegionError::BadConfig("lambda_semantic must be positive".into()));
        }
        if self.agglo_thresholds.is_empty() {
            return Err(RegionError::BadConfig("agglo_thresholds must be nonempty".into()));
        }
        let mut prev = 0.0;
        for &t in &self.agglo_thresholds {
            if t <= prev {
                return Err(RegionError::BadConfig(
                    "agglo_thresholds must be strictly increasing and positive".into(),
                ));
            }
            prev = t;
        }
        Ok(())
    }
}

/// Combined geometric + semantic distance between two place nodes,
/// meters-equivalent.
pub fn place_pair_distance(
    a: &PlaceNode,
    b: &PlaceNode,
    cfg: &RegionConfig,
) -> Result<f64, RegionError> {
    if a.view_embedding.dim() == 0 {
        return Err(RegionError::MissingEmbedding(a.id));
    }
    if b.view_embedding.dim() == 0 {
        return Err(RegionError::MissingEmbedding(b.id));
    }
    if a.id == b.id {
        return Ok(0.0);
    }
    let dx = a.position.0 - b.position.0;
    let dy = a.position.1 - b.position.1;
    let geometric = (dx * dx + dy * dy).sqrt();
    let semantic = 1.0 - cosine_similarity(&a.view_embedding, &b.view_embedding)?;
    Ok(geometric + cfg.lambda_semantic * semantic)
}

/// A cluster of place nodes (level 1) or of finer regions (levels above).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionNode {
    pub id: u32,
    /// 1 = finest level.
    pub level: u32,
    pub parent: Option<u32>,
    /// Place ids at level 1, region ids above.
    pub children: Vec<u32>,
    /// Unweighted mean of children embeddings.
    pub embedding: Embedding,
    /// Mean of member place positions, meters.
    pub centroid: (f64, f64),
}

/// Multi-level nested partition of the place-node set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionHierarchy {
    /// `levels[k]` holds the region ids at level k+1, finest first.
    pub levels: Vec<Vec<u32>>,
    pub regions: BTreeMap<u32, RegionNode>,
}

impl RegionHierarchy {
    pub fn region(&self, id: u32) -> Option<&RegionNode> {
        self.regions.get(&id)
    }

    /// All place ids under a region, in ascending order.
    pub fn member_places(&self, id: u32) -> Vec<u32> {
        let region = &self.regions[&id];
        if region.level == 1 {
            let mut out = region.children.clone();
            out.sort_unstable();
            return out;
        }
        let mut out = Vec::new();
        for &child in &region.children {
            out.extend(self.member_places(child));
        }
        out.sort_unstable();
        out
    }

    /// Partition of the place-node set at a 1-based level.
    pub fn partition_at_level(&self, level: u32) -> Vec<Vec<u32>> {
        self.levels[(level - 1) as usize]
            .iter()
            .map(|&id| self.member_places(id))
            .collect()
    }

    pub fn num_levels(&self) -> u32 {
        self.levels.len() as u32
    }

    /// Region ids at the finest (level 1) layer.
    pub fn finest_level(&self) -> &[u32] {
        &self.levels[0]
    }
}

/// Build a hierarchy from nested partitions, finest first. Each partition's
/// clusters are lists of place ids; every level-k cluster must be a union of
/// level-(k-1) clusters. Region ids are assigned level by level in order of
/// each cluster's smallest place id; embeddings and centroids are filled in
/// bottom-up from the places layer.
pub(crate) fn hierarchy_from_partitions(
    mut partitions: Vec<Vec<Vec<u32>>>,
    places: &PlacesLayer,
) -> RegionHierarchy {
    for partition in &mut partitions {
        for cluster in partition.iter_mut() {
            cluster.sort_unstable();
        }
        partition.sort_by(|a, b| a[0].cmp(&b[0]));
    }

    let mut hierarchy = RegionHierarchy::default();
    let mut next_id = 0u32;
    // region id owning each place at the previous level
    let mut place_owner: BTreeMap<u32, u32> = BTreeMap::new();

    for (k, partition) in partitions.iter().enumerate() {
        let level = (k + 1) as u32;
        let mut level_ids = Vec::new();
        let mut new_owner: BTreeMap<u32, u32> = BTreeMap::new();
        for cluster in partition {
            let id = next_id;
            next_id += 1;
            let children = if level == 1 {
                cluster.clone()
            } else {
                let mut child_ids: Vec<u32> = cluster
                    .iter()
                    .map(|p| place_owner[p])
                    .collect();
                child_ids.sort_unstable();
                child_ids.dedup();
                child_ids
            };
            if level > 1 {
                for &child in &children {
                    hierarchy.regions.get_mut(&child).unwrap().parent = Some(id);
                }
            }
            for &p in cluster {
                new_owner.insert(p, id);
            }
            hierarchy.regions.insert(
                id,
                RegionNode {
                    id,
                    level,
                    parent: None,
                    children,
                    embedding: Embedding::new(Vec::new()),
                    centroid: (0.0, 0.0),
                },
            );
            level_ids.push(id);
        }
        hierarchy.levels.push(level_ids);
        place_owner = new_owner;
    }
    build_region_embeddings(&mut hierarchy, places);
    hierarchy
}

/// Fill in embeddings (unweighted mean of children, bottom-up) and centroids
/// (mean of member place positions) for every region.
pub fn build_region_embeddings(hierarchy: &mut RegionHierarchy, places: &PlacesLayer) {
    let level_ids: Vec<Vec<u32>> = hierarchy.levels.clone();
    for level in &level_ids {
        for &id in level {
            let region = &hierarchy.regions[&id];
            let embedding = if region.level == 1 {
                Embedding::mean(
                    region
                        .children
                        .iter()
                        .map(|&p| &places.nodes[p as usize].view_embedding),
                )
            } else {
                let children = region.children.clone();
                Embedding::mean(children.iter().map(|c| &hierarchy.regions[c].embedding))
            }
            .expect("regions have nonempty children");
            let members = hierarchy.member_places(id);
            let mut cx = 0.0;
            let mut cy = 0.0;
            for &p in &members {
                cx += places.nodes[p as usize].position.0;
                cy += places.nodes[p as usize].position.1;
            }
            let inv = 1.0 / members.len() as f64;
            let region = hierarchy.regions.get_mut(&id).unwrap();
            region.embedding = embedding;
            region.centroid = (cx * inv, cy * inv);
        }
    }
}
