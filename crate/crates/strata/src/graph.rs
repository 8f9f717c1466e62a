//! The assembled 3D scene graph: places layer, region hierarchies, and
//! optional object nodes.

use crate::places::PlacesLayer;
use crate::query::OrientedBox;
use crate::regions::{RegionHierarchy, SpectralStop};
use serde::{Deserialize, Serialize};

/// An object box linked into the graph after retrieval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub label: String,
    pub bbox: OrientedBox,
    pub score: f64,
    pub place_id: Option<u32>,
}

/// Which region hierarchy a query should walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyKind {
    Agglomerative,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneGraph {
    pub places: PlacesLayer,
    #[serde(default)]
    pub agglomerative: Option<RegionHierarchy>,
    #[serde(default)]
    pub spectral: Option<RegionHierarchy>,
    /// Stop reason per spectral level-1 region, in level order; empty when no
    /// spectral hierarchy is present.
    #[serde(default)]
    pub spectral_stops: Vec<SpectralStop>,
    #[serde(default)]
    pub objects: Vec<ObjectNode>,
}

impl SceneGraph {
    pub fn hierarchy(&self, kind: HierarchyKind) -> Option<&RegionHierarchy> {
        match kind {
            HierarchyKind::Agglomerative => self.agglomerative.as_ref(),
            HierarchyKind::Spectral => self.spectral.as_ref(),
        }
    }

    /// The preferred hierarchy when the caller does not care which:
    /// agglomerative first, spectral as fallback.
    pub fn default_hierarchy(&self) -> Option<&RegionHierarchy> {
        self.agglomerative.as_ref().or(self.spectral.as_ref())
    }
}
