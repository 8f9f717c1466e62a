//! Versioned JSON persistence for the global map and scene graph.
//!
//! Saves are deterministic (identical objects serialize to identical bytes)
//! and round trips are lossless: floating-point values are written with
//! shortest round-trip precision.

use crate::fusion::{MapPoint, SemanticGlobalMap};
use crate::graph::SceneGraph;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MAP_FORMAT_VERSION: u32 = 1;
pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{path}: unsupported format version {got}, expected {expected}")]
    BadVersion {
        path: PathBuf,
        got: u32,
        expected: u32,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    format_version: u32,
    voxel_leaf: f64,
    embedding_dim: usize,
    points: Vec<MapPoint>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    format_version: u32,
    graph: SceneGraph,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PersistError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PersistError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PersistError> {
    let text = std::fs::read_to_string(path).map_err(|e| PersistError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| PersistError::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn save_map(map: &SemanticGlobalMap, path: &Path) -> Result<(), PersistError> {
    write_json(
        path,
        &MapFile {
            format_version: MAP_FORMAT_VERSION,
            voxel_leaf: map.voxel_leaf,
            embedding_dim: map.embedding_dim,
            points: map.points.clone(),
        },
    )
}

pub fn load_map(path: &Path) -> Result<SemanticGlobalMap, PersistError> {
    let file: MapFile = read_json(path)?;
    if file.format_version != MAP_FORMAT_VERSION {
        return Err(PersistError::BadVersion {
            path: path.to_path_buf(),
            got: file.format_version,
            expected: MAP_FORMAT_VERSION,
        });
    }
    Ok(SemanticGlobalMap::from_points(
        file.voxel_leaf,
        file.embedding_dim,
        file.points,
    ))
}

pub fn save_graph(graph: &SceneGraph, path: &Path) -> Result<(), PersistError> {
    write_json(
        path,
        &GraphFile {
            format_version: GRAPH_FORMAT_VERSION,
            graph: graph.clone(),
        },
    )
}

pub fn load_graph(path: &Path) -> Result<SceneGraph, PersistError> {
    let file: GraphFile = read_json(path)?;
    if file.format_version != GRAPH_FORMAT_VERSION {
        return Err(PersistError::BadVersion {
            path: path.to_path_buf(),
            got: file.format_version,
            expected: GRAPH_FORMAT_VERSION,
        });
    }
    Ok(file.graph)
}
