//! Phase 3a/3b: object retrieval over the metric-semantic map, region
//! monitoring, oriented bounding boxes, and retrieval evaluation metrics.

mod eval;
mod obb;
mod retrieve;

pub use eval::{eval_retrieval, EvalMetrics, ObjectScore};
pub use obb::oriented_bbox;
pub use retrieve::{monitor_region, retrieve_objects_3dsg, retrieve_objects_ms};

use crate::core::{CoreError, Vec3};
use crate::fusion::ResolveMode;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("invalid query config: {0}")]
    BadConfig(String),
    #[error("oriented_bbox requires at least one point")]
    NoPoints,
    #[error("graph has no region hierarchy; build one with build-graph first")]
    MissingHierarchy,
    #[error("region level {level} does not exist (hierarchy has {available} levels)")]
    BadRegionLevel { level: u32, available: u32 },
    #[error("query sets differ between ground truth and results: {0}")]
    MismatchedQueries(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// A yaw-rotated 3D box. `extents` are half-lengths along the box's local
/// x/y/z axes; `yaw` rotates local x/y about the world z axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub extents: Vec3,
    pub yaw: f64,
}

/// One retrieved object cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedBox {
    pub bbox: OrientedBox,
    /// Maximum member-point similarity to the query.
    pub score: f64,
    pub point_count: usize,
    /// Map point indices of the cluster, ascending.
    pub point_indices: Vec<usize>,
    /// Closest place node to the box center in xy, when a places layer is
    /// available.
    pub nearest_place_id: Option<u32>,
}

/// Retrieval output: boxes sorted by descending score, ties broken by the
/// smallest member point index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub boxes: Vec<RetrievedBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QueryConfig {
    /// Similarity acceptance threshold. `-1.0` accepts everything.
    pub alpha: f64,
    pub mode: ResolveMode,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub top_k_regions: usize,
    /// 1-based hierarchy level the region filter evaluates at; 1 = finest.
    pub region_level: u32,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            alpha: 0.25,
            mode: ResolveMode::Avg,
            dbscan_eps: 1.0,
            dbscan_min_pts: 5,
            top_k_regions: 3,
            region_level: 1,
        }
    }
}

impl QueryConfig {
    pub fn validate(&self) -> Result<(), QueryError> {
        // cosine similarity lives in [-1, 1]; alpha = -1 disables the filter
        if !(-1.0..1.0).contains(&self.alpha) {
            return Err(QueryError::BadConfig("alpha must be in [-1, 1)".into()));
        }
        // infinity is allowed (disables the radius filter); NaN is not
        if !(self.dbscan_eps > 0.0) {
            return Err(QueryError::BadConfig("dbscan_eps must be positive".into()));
        }
        if self.dbscan_min_pts == 0 {
            return Err(QueryError::BadConfig("dbscan_min_pts must be >= 1".into()));
        }
        if self.top_k_regions == 0 {
            return Err(QueryError::BadConfig("top_k_regions must be >= 1".into()));
        }
        if self.region_level == 0 {
            return Err(QueryError::BadConfig("region_level is 1-based".into()));
        }
        Ok(())
    }
}
