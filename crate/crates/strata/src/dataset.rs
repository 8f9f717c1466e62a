//! Replayable scene datasets: manifest + frames + embedding table + raw
//! LiDAR points, all validated eagerly on load.
//!
//! On-disk layout under a scene root directory (see `docs/FORMATS.md`):
//!
//! ```text
//! manifest.json     scalars, terrain class table, optional ground truth
//! frames.jsonl      one FrameRecord per line, timestamps strictly increasing
//! embeddings.jsonl  {"id": ..., "values": [...]} per line
//! frames/NNNNNN.bin flat little-endian f32 (x,y,z) triples, sensor frame
//! ```

use crate::core::{CameraIntrinsics, CoreError, Embedding, Pose, TerrainClass, Vec3};
use crate::geom;
use crate::query::OrientedBox;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SCENE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation in {file} (line {line}): {message}")]
    Schema {
        file: String,
        line: usize,
        message: String,
    },
    #[error("unsupported scene format version {0}")]
    BadVersion(u32),
    #[error("dangling embedding id {id:?} referenced by {context}")]
    DanglingEmbedding { id: String, context: String },
    #[error("embedding {id:?} has dimension {got}, manifest declares {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("embedding {id:?} contains a non-finite value")]
    NonFiniteEmbedding { id: String },
    #[error("non-monotone timestamps: frame {index} has {current} after {previous}")]
    NonMonotoneTimestamps {
        index: usize,
        previous: f64,
        current: f64,
    },
    #[error("frame {frame}: {source}")]
    InvalidFrame {
        frame: usize,
        #[source]
        source: CoreError,
    },
    #[error("frame {frame} mask {mask}: polygon has {count} vertices, need at least 3")]
    MaskTooFewVertices {
        frame: usize,
        mask: usize,
        count: usize,
    },
    #[error("frame {frame} mask {mask}: vertex ({u}, {v}) outside image bounds")]
    MaskOutOfBounds {
        frame: usize,
        mask: usize,
        u: f64,
        v: f64,
    },
    #[error("frame {frame} mask {mask}: unknown terrain class id {id}")]
    UnknownTerrain { frame: usize, mask: usize, id: u32 },
    #[error(
        "frame {frame}: terrain mask {terrain_mask} overlaps non-terrain mask {other_mask} \
         by {fraction:.3} of the smaller mask area"
    )]
    MaskOverlap {
        frame: usize,
        terrain_mask: usize,
        other_mask: usize,
        fraction: f64,
    },
    #[error("terrain class table invalid: {0}")]
    BadTerrainTable(String),
    #[error("frame {frame}: lidar file {path} does not exist")]
    LidarFileMissing { frame: usize, path: PathBuf },
    #[error("lidar file {path}: length {len} is not a multiple of 12 bytes")]
    LidarFileCorrupt { path: PathBuf, len: u64 },
    #[error("ground truth object {label:?}: {message}")]
    BadGroundTruth { label: String, message: String },
}

/// A segmentation mask: pixel-space polygon plus the embedding it carries.
/// `terrain` is set for terrain masks and references the manifest class table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskRecord {
    pub polygon: Vec<(f64, f64)>,
    pub terrain: Option<u32>,
    pub embedding_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub timestamp: f64,
    pub pose: Pose,
    pub intrinsics: CameraIntrinsics,
    pub lidar_file: String,
    pub image_embedding_id: String,
    pub masks: Vec<MaskRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthObject {
    pub label: String,
    pub query_embedding_id: String,
    pub obb: OrientedBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainClassEntry {
    pub id: u32,
    pub name: String,
    pub embedding_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub embedding_dim: usize,
    pub terrain_classes: Vec<TerrainClassEntry>,
    #[serde(default)]
    pub ground_truth: Vec<GroundTruthObject>,
}

/// A fully validated in-memory scene.
#[derive(Debug, Clone)]
pub struct SceneDataset {
    pub root: PathBuf,
    pub embedding_dim: usize,
    pub terrain_classes: Vec<TerrainClass>,
    /// terrain class id -> embedding id in the table
    pub terrain_embedding_ids: BTreeMap<u32, String>,
    pub frames: Vec<FrameRecord>,
    pub embeddings: BTreeMap<String, Embedding>,
    pub ground_truth: Vec<GroundTruthObject>,
}

impl SceneDataset {
    pub fn embedding(&self, id: &str) -> Option<&Embedding> {
        self.embeddings.get(id)
    }

    pub fn terrain_class(&self, id: u32) -> Option<&TerrainClass> {
        self.terrain_classes.iter().find(|c| c.id == id)
    }

    pub fn terrain_embedding(&self, id: u32) -> Option<&Embedding> {
        self.terrain_embedding_ids
            .get(&id)
            .and_then(|eid| self.embeddings.get(eid))
    }

    /// Read a frame's raw LiDAR points (sensor frame).
    pub fn load_lidar(&self, frame: &FrameRecord) -> Result<Vec<Vec3>, DatasetError> {
        let path = self.root.join(&frame.lidar_file);
        let bytes = std::fs::read(&path).map_err(|e| DatasetError::Io {
            path: path.clone(),
            source: e,
        })?;
        if bytes.len() % 12 != 0 {
            return Err(DatasetError::LidarFileCorrupt {
                path,
                len: bytes.len() as u64,
            });
        }
        let mut points = Vec::with_capacity(bytes.len() / 12);
        for chunk in bytes.chunks_exact(12) {
            let x = f32::from_le_bytes(chunk[0..4].try_into().unwrap()) as f64;
            let y = f32::from_le_bytes(chunk[4..8].try_into().unwrap()) as f64;
            let z = f32::from_le_bytes(chunk[8..12].try_into().unwrap()) as f64;
            points.push(Vec3::new(x, y, z));
        }
        Ok(points)
    }
}

fn read_to_string(path: &Path) -> Result<String, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Load and eagerly validate a scene from `root_dir`.
pub fn load_scene(root_dir: &Path) -> Result<SceneDataset, DatasetError> {
    let manifest_path = root_dir.join("manifest.json");
    let manifest: Manifest =
        serde_json::from_str(&read_to_string(&manifest_path)?).map_err(|e| DatasetError::Schema {
            file: "manifest.json".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
    if manifest.format_version != SCENE_FORMAT_VERSION {
        return Err(DatasetError::BadVersion(manifest.format_version));
    }

    // terrain class table
    let mut terrain_classes = Vec::new();
    let mut terrain_embedding_ids = BTreeMap::new();
    for entry in &manifest.terrain_classes {
        if entry.name.is_empty() {
            return Err(DatasetError::BadTerrainTable(format!(
                "class id {} has an empty name",
                entry.id
            )));
        }
        if terrain_embedding_ids
            .insert(entry.id, entry.embedding_id.clone())
            .is_some()
        {
            return Err(DatasetError::BadTerrainTable(format!(
                "duplicate class id {}",
                entry.id
            )));
        }
        terrain_classes.push(TerrainClass {
            id: entry.id,
            name: entry.name.clone(),
        });
    }

    // embedding table
    let emb_path = root_dir.join("embeddings.jsonl");
    let mut embeddings: BTreeMap<String, Embedding> = BTreeMap::new();
    #[derive(Deserialize)]
    struct EmbeddingLine {
        id: String,
        values: Vec<f64>,
    }
    for (lineno, line) in read_to_string(&emb_path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingLine =
            serde_json::from_str(line).map_err(|e| DatasetError::Schema {
                file: "embeddings.jsonl".into(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        if rec.values.len() != manifest.embedding_dim {
            return Err(DatasetError::DimensionMismatch {
                id: rec.id,
                expected: manifest.embedding_dim,
                got: rec.values.len(),
            });
        }
        let emb = Embedding::new(rec.values);
        if !emb.is_finite() {
            return Err(DatasetError::NonFiniteEmbedding { id: rec.id });
        }
        embeddings.insert(rec.id, emb);
    }

    let resolve = |id: &str, context: String| -> Result<(), DatasetError> {
        if embeddings.contains_key(id) {
            Ok(())
        } else {
            Err(DatasetError::DanglingEmbedding {
                id: id.to_string(),
                context,
            })
        }
    };

    for entry in &manifest.terrain_classes {
        resolve(
            &entry.embedding_id,
            format!("terrain class {:?}", entry.name),
        )?;
    }

    // frames
    let frames_path = root_dir.join("frames.jsonl");
    let mut frames: Vec<FrameRecord> = Vec::new();
    for (lineno, line) in read_to_string(&frames_path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let frame: FrameRecord =
            serde_json::from_str(line).map_err(|e| DatasetError::Schema {
                file: "frames.jsonl".into(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        frames.push(frame);
    }

    for (i, frame) in frames.iter().enumerate() {
        if i > 0 && frame.timestamp <= frames[i - 1].timestamp {
            return Err(DatasetError::NonMonotoneTimestamps {
                index: i,
                previous: frames[i - 1].timestamp,
                current: frame.timestamp,
            });
        }
        frame
            .pose
            .validate()
            .map_err(|e| DatasetError::InvalidFrame { frame: i, source: e })?;
        frame
            .intrinsics
            .validate()
            .map_err(|e| DatasetError::InvalidFrame { frame: i, source: e })?;
        let lidar_path = root_dir.join(&frame.lidar_file);
        if !lidar_path.exists() {
            return Err(DatasetError::LidarFileMissing {
                frame: i,
                path: lidar_path,
            });
        }
        resolve(&frame.image_embedding_id, format!("frame {i} image"))?;
        let w = frame.intrinsics.width as f64;
        let h = frame.intrinsics.height as f64;
        for (m, mask) in frame.masks.iter().enumerate() {
            if mask.polygon.len() < 3 {
                return Err(DatasetError::MaskTooFewVertices {
                    frame: i,
                    mask: m,
                    count: mask.polygon.len(),
                });
            }
            for &(u, v) in &mask.polygon {
                if !(0.0..=w).contains(&u) || !(0.0..=h).contains(&v) {
                    return Err(DatasetError::MaskOutOfBounds {
                        frame: i,
                        mask: m,
                        u,
                        v,
                    });
                }
            }
            if let Some(tid) = mask.terrain {
                if !terrain_embedding_ids.contains_key(&tid) {
                    return Err(DatasetError::UnknownTerrain {
                        frame: i,
                        mask: m,
                        id: tid,
                    });
                }
            }
            resolve(&mask.embedding_id, format!("frame {i} mask {m}"))?;
        }
        validate_mask_disjointness(i, frame)?;
    }

    for gt in &manifest.ground_truth {
        resolve(&gt.query_embedding_id, format!("ground truth {:?}", gt.label))?;
        if !(gt.obb.extents.x > 0.0 && gt.obb.extents.y > 0.0 && gt.obb.extents.z > 0.0) {
            return Err(DatasetError::BadGroundTruth {
                label: gt.label.clone(),
                message: "oriented box extents must be positive".into(),
            });
        }
    }

    Ok(SceneDataset {
        root: root_dir.to_path_buf(),
        embedding_dim: manifest.embedding_dim,
        terrain_classes,
        terrain_embedding_ids,
        frames,
        embeddings,
        ground_truth: manifest.ground_truth,
    })
}

/// Pixel area of a mask polygon, counted on the integer pixel lattice.
fn pixel_area(poly: &[(f64, f64)]) -> usize {
    let (min_x, min_y, max_x, max_y) = geom::bbox(poly);
    let mut count = 0;
    let mut v = min_y.floor();
    while v <= max_y {
        let mut u = min_x.floor();
        while u <= max_x {
            if geom::point_in_polygon((u, v), poly) {
                count += 1;
            }
            u += 1.0;
        }
        v += 1.0;
    }
    count
}

/// Terrain masks and non-terrain masks must overlap by less than 1% of
/// either mask's pixel area.
fn validate_mask_disjointness(frame_idx: usize, frame: &FrameRecord) -> Result<(), DatasetError> {
    let terrain: Vec<usize> = (0..frame.masks.len())
        .filter(|&m| frame.masks[m].terrain.is_some())
        .collect();
    let object: Vec<usize> = (0..frame.masks.len())
        .filter(|&m| frame.masks[m].terrain.is_none())
        .collect();
    for &t in &terrain {
        let tp = &frame.masks[t].polygon;
        let (tx0, ty0, tx1, ty1) = geom::bbox(tp);
        for &o in &object {
            let op = &frame.masks[o].polygon;
            let (ox0, oy0, ox1, oy1) = geom::bbox(op);
            if tx1 < ox0 || ox1 < tx0 || ty1 < oy0 || oy1 < ty0 {
                continue; // bounding boxes disjoint
            }
            let x0 = tx0.max(ox0).floor();
            let y0 = ty0.max(oy0).floor();
            let x1 = tx1.min(ox1);
            let y1 = ty1.min(oy1);
            let mut both = 0usize;
            let mut v = y0;
            while v <= y1 {
                let mut u = x0;
                while u <= x1 {
                    if geom::point_in_polygon((u, v), tp) && geom::point_in_polygon((u, v), op) {
                        both += 1;
                    }
                    u += 1.0;
                }
                v += 1.0;
            }
            if both == 0 {
                continue;
            }
            let smaller = pixel_area(tp).min(pixel_area(op)).max(1);
            let fraction = both as f64 / smaller as f64;
            if fraction >= 0.01 {
                return Err(DatasetError::MaskOverlap {
                    frame: frame_idx,
                    terrain_mask: t,
                    other_mask: o,
                    fraction,
                });
            }
        }
    }
    Ok(())
}

/// Frames and LiDAR buffers to be written alongside a manifest. The writer is
/// deterministic: identical inputs produce byte-identical files.
pub struct SceneWriter<'a> {
    pub embedding_dim: usize,
    pub terrain_classes: &'a [TerrainClassEntry],
    pub frames: &'a [(FrameRecord, Vec<Vec3>)],
    pub embeddings: &'a BTreeMap<String, Embedding>,
    pub ground_truth: &'a [GroundTruthObject],
}

pub fn write_scene(root_dir: &Path, scene: &SceneWriter) -> Result<(), DatasetError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |e: std::io::Error| DatasetError::Io { path, source: e }
    };
    std::fs::create_dir_all(root_dir.join("frames")).map_err(io_err(root_dir))?;

    let manifest = Manifest {
        format_version: SCENE_FORMAT_VERSION,
        embedding_dim: scene.embedding_dim,
        terrain_classes: scene.terrain_classes.to_vec(),
        ground_truth: scene.ground_truth.to_vec(),
    };
    let manifest_path = root_dir.join("manifest.json");
    let mut manifest_json = serde_json::to_string_pretty(&manifest).expect("serialize manifest");
    manifest_json.push('\n');
    std::fs::write(&manifest_path, manifest_json).map_err(io_err(&manifest_path))?;

    let frames_path = root_dir.join("frames.jsonl");
    let mut frames_file =
        std::io::BufWriter::new(std::fs::File::create(&frames_path).map_err(io_err(&frames_path))?);
    for (frame, points) in scene.frames {
        let line = serde_json::to_string(frame).expect("serialize frame");
        writeln!(frames_file, "{line}").map_err(io_err(&frames_path))?;
        let lidar_path = root_dir.join(&frame.lidar_file);
        let mut buf = Vec::with_capacity(points.len() * 12);
        for p in points {
            buf.extend_from_slice(&(p.x as f32).to_le_bytes());
            buf.extend_from_slice(&(p.y as f32).to_le_bytes());
            buf.extend_from_slice(&(p.z as f32).to_le_bytes());
        }
        std::fs::write(&lidar_path, buf).map_err(io_err(&lidar_path))?;
    }
    frames_file.flush().map_err(io_err(&frames_path))?;

    let emb_path = root_dir.join("embeddings.jsonl");
    let mut emb_file =
        std::io::BufWriter::new(std::fs::File::create(&emb_path).map_err(io_err(&emb_path))?);
    for (id, emb) in scene.embeddings {
        let line = serde_json::json!({"id": id, "values": emb.values});
        writeln!(emb_file, "{line}").map_err(io_err(&emb_path))?;
    }
    emb_file.flush().map_err(io_err(&emb_path))?;
    Ok(())
}

/// Convenience for tests: read a file line by line.
pub fn read_lines(path: &Path) -> std::io::Result<Vec<String>> {
    let file = std::fs::File::open(path)?;
    std::io::BufReader::new(file).lines().collect()
}
