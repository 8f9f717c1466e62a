//! Outdoor metric-semantic mapping and terrain-aware hierarchical 3D scene graphs.
//!
//! The pipeline has three phases:
//!
//! 1. **Fusion** ([`fusion`]): LiDAR points are projected into per-frame
//!    segmentation masks and merged into a sparse voxelized global map where
//!    each point carries a deduplicated set of semantic embeddings with
//!    occurrence counts.
//! 2. **Graph construction** ([`places`], [`regions`]): terrain-labeled map
//!    points are rasterized per terrain class, a 2D brushfire GVD yields
//!    terrain-aware place nodes, and place nodes are clustered into
//!    hierarchical region layers (agglomerative or spectral).
//! 3. **Querying** ([`query`], [`planner`]): open-vocabulary object
//!    retrieval, region monitoring, and terrain-aware A* path planning.
//!
//! [`scenegen`] procedurally generates ground-truth scenes and provides
//! brute-force oracles used by the test suites. [`dataset`] and [`persist`]
//! define the on-disk formats (see `docs/FORMATS.md`).

pub mod config;
pub mod core;
pub mod dataset;
pub mod dbscan;
pub mod fusion;
pub mod geom;
pub mod graph;
pub mod persist;
pub mod places;
pub mod planner;
pub mod query;
pub mod regions;
pub mod scenegen;
pub mod svg;
