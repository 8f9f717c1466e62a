//! Procedural ground-truth scene generation.
//!
//! Scenes are generated on a fixed half-meter lattice aligned with the fusion
//! voxel grid: every sampled point sits on a voxel center, so the Phase 1 map
//! reproduces the sampled geometry exactly and retrieval quality can be
//! asserted against analytically known boxes. Semantic separability is fully
//! controlled: each entity (terrain class or object) owns one axis of an
//! orthogonal basis and mixes in a shared component scaled by its margin, so
//! the cosine similarity between two entities with margins `m1`, `m2` is
//! `sqrt(m1 * m2)`.

pub mod oracle;

use crate::core::{CameraIntrinsics, Embedding, Pose, Quaternion, Vec3};
use crate::dataset::{
    write_scene, DatasetError, FrameRecord, GroundTruthObject, MaskRecord, SceneWriter,
    TerrainClassEntry,
};
use crate::fusion::project_points;
use crate::geom;
use crate::query::oriented_bbox;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneGenError {
    #[error("invalid scene spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Query(#[from] crate::query::QueryError),
}

/// Sampling lattice pitch, meters. Matches the default fusion voxel leaf so
/// sampled points coincide with voxel centers.
pub const LATTICE: f64 = 0.5;

/// Object points are sampled at these heights (voxel centers above the
/// ground, below the camera's principal ray so object masks and terrain
/// masks never overlap in the image).
const OBJECT_HEIGHTS: [f64; 3] = [1.75, 2.25, 2.75];

fn default_frame_spacing() -> f64 {
    2.0
}
fn default_sensor_range() -> f64 {
    25.0
}
fn default_camera_height() -> f64 {
    1.5
}
fn default_embedding_noise() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    /// Terrain class id; several patches may share one class.
    pub terrain: u32,
    pub name: String,
    /// (x0, y0, x1, y1), meters; half-open in both axes.
    pub rect: (f64, f64, f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub label: String,
    /// Footprint center, meters.
    pub position: (f64, f64),
    /// Footprint side lengths, meters.
    pub footprint: (f64, f64),
    /// Separability margin in [0, 1]: cosine similarity toward other
    /// margin-m entities is about m; 0 means orthogonal.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    /// World extent (width, depth), meters; all content must fit inside.
    pub extent: (f64, f64),
    /// Embedding dimension; defaults to one axis per entity plus the shared
    /// component.
    #[serde(default)]
    pub embedding_dim: Option<usize>,
    #[serde(default)]
    pub terrain_patches: Vec<PatchSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    /// Camera waypoints; frames are placed every `frame_spacing` meters
    /// along this polyline.
    #[serde(default)]
    pub trajectory: Vec<(f64, f64)>,
    #[serde(default = "default_frame_spacing")]
    pub frame_spacing: f64,
    #[serde(default = "default_sensor_range")]
    pub sensor_range: f64,
    #[serde(default = "default_camera_height")]
    pub camera_height: f64,
    /// Margin applied to terrain class embeddings.
    #[serde(default)]
    pub terrain_margin: f64,
    /// Standard deviation of the Gaussian noise mixed into per-frame image
    /// embeddings and query embeddings.
    #[serde(default = "default_embedding_noise")]
    pub embedding_noise: f64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SceneGenError> {
        let bad = |msg: String| Err(SceneGenError::BadSpec(msg));
        if !(self.extent.0 > 0.0 && self.extent.1 > 0.0) {
            return bad("extent must be positive".into());
        }
        if !(self.frame_spacing > 0.0) {
            return bad("frame_spacing must be positive".into());
        }
        if !(self.sensor_range > 0.0) {
            return bad("sensor_range must be positive".into());
        }
        if !(self.camera_height > 0.0) {
            return bad("camera_height must be positive".into());
        }
        if !self.objects.is_empty() && self.camera_height >= OBJECT_HEIGHTS[0] {
            // the camera must sit below the object point layers so object and
            // terrain masks stay on opposite sides of the principal ray
            return bad(format!(
                "camera_height must be below {} when objects are present",
                OBJECT_HEIGHTS[0]
            ));
        }
        if !(0.0..=1.0).contains(&self.terrain_margin) {
            return bad("terrain_margin must be in [0, 1]".into());
        }
        if self.embedding_noise < 0.0 {
            return bad("embedding_noise must be nonnegative".into());
        }
        let mut names: BTreeMap<u32, &str> = BTreeMap::new();
        for p in &self.terrain_patches {
            let (x0, y0, x1, y1) = p.rect;
            if !(x1 > x0 && y1 > y0) {
                return bad(format!("patch {:?} rect is degenerate", p.name));
            }
            if x0 < 0.0 || y0 < 0.0 || x1 > self.extent.0 || y1 > self.extent.1 {
                return bad(format!("patch {:?} exceeds the extent", p.name));
            }
            if let Some(prev) = names.insert(p.terrain, &p.name) {
                if prev != p.name {
                    return bad(format!(
                        "terrain id {} used with two names: {:?} and {:?}",
                        p.terrain, prev, p.name
                    ));
                }
            }
        }
        for o in &self.objects {
            if !(o.footprint.0 > 0.0 && o.footprint.1 > 0.0) {
                return bad(format!("object {:?} footprint must be positive", o.label));
            }
            if !(0.0..=1.0).contains(&o.margin) {
                return bad(format!("object {:?} margin must be in [0, 1]", o.label));
            }
            let on_patch = self.terrain_patches.iter().any(|p| {
                let (x0, y0, x1, y1) = p.rect;
                o.position.0 >= x0 && o.position.0 < x1 && o.position.1 >= y0 && o.position.1 < y1
            });
            if !on_patch {
                return bad(format!("object {:?} lies on no terrain patch", o.label));
            }
        }
        for &(x, y) in &self.trajectory {
            if x < 0.0 || y < 0.0 || x > self.extent.0 || y > self.extent.1 {
                return bad("trajectory leaves the extent".into());
            }
        }
        let required = self.required_dim();
        if let Some(dim) = self.embedding_dim {
            if dim < required {
                return bad(format!(
                    "embedding_dim {dim} is too small; need at least {required}"
                ));
            }
        }
        Ok(())
    }

    /// One basis axis per terrain class and per object, plus the shared
    /// component axis.
    pub fn required_dim(&self) -> usize {
        let classes: std::collections::BTreeSet<u32> =
            self.terrain_patches.iter().map(|p| p.terrain).collect();
        classes.len() + self.objects.len() + 1
    }

    fn dim(&self) -> usize {
        self.embedding_dim.unwrap_or_else(|| self.required_dim())
    }
}

/// Fixed intrinsics used for every generated frame.
pub fn generator_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 300.0,
        fy: 300.0,
        cx: 320.0,
        cy: 240.0,
        width: 640,
        height: 480,
    }
}

/// Orientation of a camera at world yaw `yaw`, horizontal principal ray:
/// camera +z maps to (cos yaw, sin yaw, 0), +x right, +y down.
pub fn camera_quaternion(yaw: f64) -> Quaternion {
    // base orientation (yaw 0): x -> (0,-1,0), y -> (0,0,-1), z -> (1,0,0)
    let base = Quaternion::new(0.5, -0.5, 0.5, -0.5);
    Quaternion::from_yaw(yaw).mul(&base)
}

/// `sqrt(1-m) * basis_axis + sqrt(m) * shared_axis`, a unit vector.
fn margin_embedding(dim: usize, axis: usize, margin: f64) -> Embedding {
    let mut v = vec![0.0; dim];
    v[axis] = (1.0 - margin).sqrt();
    v[dim - 1] = margin.sqrt();
    Embedding::new(v)
}

fn gaussian_noise(rng: &mut ChaCha8Rng, dim: usize, sigma: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * sigma
        })
        .collect()
}

fn normalize(values: Vec<f64>) -> Embedding {
    let e = Embedding::new(values);
    let n = e.norm();
    if n == 0.0 {
        e
    } else {
        e.scale(1.0 / n)
    }
}

/// Centers of lattice cells whose center lies in the half-open range
/// `[lo, hi)`.
fn lattice_range(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let first = ((lo - LATTICE / 2.0) / LATTICE).ceil() as i64;
    (first..)
        .map(|k| (k as f64 + 0.5) * LATTICE)
        .take_while(move |&c| c < hi)
}

/// All world-frame sample points of an object: a lattice grid over its
/// footprint replicated at each object height.
pub fn object_points(o: &ObjectSpec) -> Vec<Vec3> {
    let (lx, ly) = o.footprint;
    let xs: Vec<f64> = lattice_range(o.position.0 - lx / 2.0, o.position.0 + lx / 2.0).collect();
    let ys: Vec<f64> = lattice_range(o.position.1 - ly / 2.0, o.position.1 + ly / 2.0).collect();
    let mut out = Vec::new();
    for &z in &OBJECT_HEIGHTS {
        for &x in &xs {
            for &y in &ys {
                out.push(Vec3::new(x, y, z));
            }
        }
    }
    out
}

/// Frame camera poses along the trajectory polyline, one every
/// `frame_spacing` meters of arc length. The camera looks along the local
/// segment direction.
pub fn trajectory_poses(spec: &SceneSpec) -> Vec<Pose> {
    let waypoints = &spec.trajectory;
    if waypoints.is_empty() {
        return Vec::new();
    }
    let make = |pos: (f64, f64), yaw: f64| {
        Pose::new(
            Vec3::new(pos.0, pos.1, spec.camera_height),
            camera_quaternion(yaw),
        )
    };
    if waypoints.len() == 1 {
        return vec![make(waypoints[0], 0.0)];
    }
    let mut poses = Vec::new();
    let mut carry = 0.0; // distance into the next sample from the segment start
    for pair in waypoints.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let seg = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        if seg == 0.0 {
            continue;
        }
        let yaw = (b.1 - a.1).atan2(b.0 - a.0);
        let mut s = carry;
        while s < seg {
            let t = s / seg;
            poses.push(make((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)), yaw));
            s += spec.frame_spacing;
        }
        carry = s - seg;
    }
    poses
}

struct Entity {
    /// Index into the per-frame mask list when visible.
    embedding_id: String,
    embedding: Embedding,
    /// World sample points.
    points: Vec<Vec3>,
    terrain: Option<u32>,
    /// Object footprint center (occlusion ordering); unused for terrain.
    center: (f64, f64),
}

/// Generate a dataset on disk. Deterministic: the same spec always produces
/// byte-identical files.
pub fn generate_scene(spec: &SceneSpec, out_dir: &Path) -> Result<(), SceneGenError> {
    spec.validate()?;
    let dim = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let intr = generator_intrinsics();

    // entity embeddings: terrain classes first (ascending id), then objects
    let mut embeddings: BTreeMap<String, Embedding> = BTreeMap::new();
    let classes: BTreeMap<u32, String> = spec
        .terrain_patches
        .iter()
        .map(|p| (p.terrain, p.name.clone()))
        .collect();
    let mut axis = 0usize;
    let mut class_embedding_ids: BTreeMap<u32, String> = BTreeMap::new();
    for (&tid, name) in &classes {
        let id = format!("terrain/{name}");
        embeddings.insert(id.clone(), margin_embedding(dim, axis, spec.terrain_margin));
        class_embedding_ids.insert(tid, id);
        axis += 1;
    }
    let mut object_embedding_ids = Vec::new();
    for o in &spec.objects {
        let id = format!("object/{}", o.label);
        embeddings.insert(id.clone(), margin_embedding(dim, axis, o.margin));
        object_embedding_ids.push(id);
        axis += 1;
    }
    // query embeddings: the object embedding plus a little noise
    for (o, oid) in spec.objects.iter().zip(&object_embedding_ids) {
        let base = embeddings[oid].clone();
        let noise = gaussian_noise(&mut rng, dim, spec.embedding_noise / 2.0);
        let values = base
            .values
            .iter()
            .zip(&noise)
            .map(|(b, n)| b + n)
            .collect();
        embeddings.insert(format!("query/{}", o.label), normalize(values));
    }

    let mut entities: Vec<Entity> = Vec::new();
    for p in &spec.terrain_patches {
        let (x0, y0, x1, y1) = p.rect;
        let mut points = Vec::new();
        for x in lattice_range(x0, x1) {
            for y in lattice_range(y0, y1) {
                points.push(Vec3::new(x, y, 0.0));
            }
        }
        entities.push(Entity {
            embedding_id: class_embedding_ids[&p.terrain].clone(),
            embedding: embeddings[&class_embedding_ids[&p.terrain]].clone(),
            points,
            terrain: Some(p.terrain),
            center: ((x0 + x1) / 2.0, (y0 + y1) / 2.0),
        });
    }
    for (o, oid) in spec.objects.iter().zip(&object_embedding_ids) {
        entities.push(Entity {
            embedding_id: oid.clone(),
            embedding: embeddings[oid].clone(),
            points: object_points(o),
            terrain: None,
            center: o.position,
        });
    }

    // frames
    let poses = trajectory_poses(spec);
    let mut frames: Vec<(FrameRecord, Vec<Vec3>)> = Vec::new();
    for (f, pose) in poses.iter().enumerate() {
        let (record, lidar, visible) = render_frame(spec, &intr, pose, f, &entities)?;
        // image embedding: mean of visible entity embeddings plus noise
        let mut acc = vec![0.0; dim];
        for &e in &visible {
            for (a, v) in acc.iter_mut().zip(&entities[e].embedding.values) {
                *a += v / visible.len() as f64;
            }
        }
        let noise = gaussian_noise(&mut rng, dim, spec.embedding_noise);
        for (a, n) in acc.iter_mut().zip(&noise) {
            *a += n;
        }
        let mut image = normalize(acc);
        if image.norm() == 0.0 {
            // nothing visible and zero noise: give the frame a unit vector
            let mut v = vec![0.0; dim];
            v[dim - 1] = 1.0;
            image = Embedding::new(v);
        }
        embeddings.insert(record.image_embedding_id.clone(), image);
        frames.push((record, lidar));
    }

    // ground truth from the full (not per-frame) object point sets
    let mut ground_truth = Vec::new();
    for o in &spec.objects {
        ground_truth.push(GroundTruthObject {
            label: o.label.clone(),
            query_embedding_id: format!("query/{}", o.label),
            obb: oriented_bbox(&object_points(o))?,
        });
    }

    let terrain_classes: Vec<TerrainClassEntry> = classes
        .iter()
        .map(|(&id, name)| TerrainClassEntry {
            id,
            name: name.clone(),
            embedding_id: class_embedding_ids[&id].clone(),
        })
        .collect();

    write_scene(
        out_dir,
        &SceneWriter {
            embedding_dim: dim,
            terrain_classes: &terrain_classes,
            frames: &frames,
            embeddings: &embeddings,
            ground_truth: &ground_truth,
        },
    )?;
    Ok(())
}

/// Render one frame: project every entity's candidate points, emit a mask per
/// sufficiently visible entity (convex hull of its projected points), resolve
/// object-object image overlaps by keeping the nearer object, and assemble
/// the sensor-frame LiDAR buffer. Returns the frame record, its points, and
/// the visible entity indices.
fn render_frame(
    spec: &SceneSpec,
    intr: &CameraIntrinsics,
    pose: &Pose,
    frame_index: usize,
    entities: &[Entity],
) -> Result<(FrameRecord, Vec<Vec3>, Vec<usize>), SceneGenError> {
    let world_to_sensor = pose.inverse();
    let cam = (pose.translation.x, pose.translation.y);

    struct Visible {
        entity: usize,
        sensor_points: Vec<Vec3>,
        hull: Vec<(f64, f64)>,
    }
    let mut candidates: Vec<Visible> = Vec::new();
    for (e, entity) in entities.iter().enumerate() {
        // cheap prefilter in xy before projecting
        let near: Vec<Vec3> = entity
            .points
            .iter()
            .filter(|p| {
                let dx = p.x - cam.0;
                let dy = p.y - cam.1;
                dx * dx + dy * dy <= spec.sensor_range * spec.sensor_range
            })
            .map(|p| crate::core::transform_point(p, &world_to_sensor))
            .collect();
        let projected = project_points(&near, intr, spec.sensor_range);
        if projected.len() < 3 {
            continue;
        }
        let pixels: Vec<(f64, f64)> = projected.iter().map(|p| (p.u, p.v)).collect();
        let hull = geom::convex_hull(&pixels);
        if hull.len() < 3 {
            continue;
        }
        candidates.push(Visible {
            entity: e,
            sensor_points: projected.iter().map(|p| near[p.index]).collect(),
            hull,
        });
    }

    // occlusion surrogate: when two object masks overlap in the image, keep
    // the one whose footprint center is nearer the camera
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let d = |v: &Visible| {
            let c = entities[v.entity].center;
            (c.0 - cam.0).powi(2) + (c.1 - cam.1).powi(2)
        };
        d(&candidates[a])
            .partial_cmp(&d(&candidates[b]))
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut kept = vec![true; candidates.len()];
    let mut kept_boxes: Vec<(f64, f64, f64, f64)> = Vec::new();
    for &i in &order {
        if entities[candidates[i].entity].terrain.is_some() {
            continue; // terrain masks never collide with each other or objects
        }
        let bb = geom::bbox(&candidates[i].hull);
        let overlaps = kept_boxes
            .iter()
            .any(|o| !(bb.2 < o.0 || o.2 < bb.0 || bb.3 < o.1 || o.3 < bb.1));
        if overlaps {
            kept[i] = false;
        } else {
            kept_boxes.push(bb);
        }
    }

    let mut masks = Vec::new();
    let mut lidar = Vec::new();
    let mut visible_entities = Vec::new();
    for (i, cand) in candidates.iter().enumerate() {
        if !kept[i] {
            continue;
        }
        let entity = &entities[cand.entity];
        masks.push(MaskRecord {
            polygon: cand.hull.clone(),
            terrain: entity.terrain,
            embedding_id: entity.embedding_id.clone(),
        });
        lidar.extend_from_slice(&cand.sensor_points);
        visible_entities.push(cand.entity);
    }

    let record = FrameRecord {
        timestamp: frame_index as f64 * 0.1,
        pose: *pose,
        intrinsics: intr.clone(),
        lidar_file: format!("frames/{frame_index:06}.bin"),
        image_embedding_id: format!("frame/{frame_index:06}"),
        masks,
    };
    Ok((record, lidar, visible_entities))
}

/// A small two-terrain, two-object scene used by the runnable examples and
/// the end-to-end tests: a sidewalk strip with a bench and a grass strip
/// with a fountain, traversed left to right.
pub fn demo_spec() -> SceneSpec {
    SceneSpec {
        seed: 7,
        extent: (60.0, 30.0),
        embedding_dim: None,
        terrain_patches: vec![
            PatchSpec {
                terrain: 0,
                name: "sidewalk".into(),
                rect: (0.0, 0.0, 60.0, 15.0),
            },
            PatchSpec {
                terrain: 1,
                name: "grass".into(),
                rect: (0.0, 15.0, 60.0, 30.0),
            },
        ],
        objects: vec![
            ObjectSpec {
                label: "bench".into(),
                position: (20.0, 10.0),
                footprint: (4.0, 2.0),
                margin: 0.1,
            },
            ObjectSpec {
                label: "fountain".into(),
                position: (40.0, 20.0),
                footprint: (3.0, 3.0),
                margin: 0.1,
            },
        ],
        trajectory: vec![(5.0, 12.0), (55.0, 12.0)],
        frame_spacing: 2.0,
        sensor_range: 25.0,
        camera_height: 1.5,
        terrain_margin: 0.0,
        embedding_noise: 0.02,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_scene;

    fn basic_spec() -> SceneSpec {
        SceneSpec {
            seed: 42,
            extent: (60.0, 30.0),
            embedding_dim: None,
            terrain_patches: vec![PatchSpec {
                terrain: 0,
                name: "sidewalk".into(),
                rect: (0.0, 0.0, 60.0, 30.0),
            }],
            objects: vec![ObjectSpec {
                label: "bench".into(),
                position: (30.0, 20.0),
                footprint: (4.0, 2.0),
                margin: 0.1,
            }],
            trajectory: vec![(5.0, 10.0), (55.0, 10.0)],
            frame_spacing: 2.0,
            sensor_range: 25.0,
            camera_height: 1.5,
            terrain_margin: 0.0,
            embedding_noise: 0.02,
        }
    }

    #[test]
    fn camera_quaternion_axes() {
        let q = camera_quaternion(0.0);
        assert!((q.norm() - 1.0).abs() < 1e-12);
        let fwd = q.rotate(&Vec3::new(0.0, 0.0, 1.0));
        let right = q.rotate(&Vec3::new(1.0, 0.0, 0.0));
        let down = q.rotate(&Vec3::new(0.0, 1.0, 0.0));
        assert!(fwd.dist(&Vec3::new(1.0, 0.0, 0.0)) < 1e-12);
        assert!(right.dist(&Vec3::new(0.0, -1.0, 0.0)) < 1e-12);
        assert!(down.dist(&Vec3::new(0.0, 0.0, -1.0)) < 1e-12);
        let q90 = camera_quaternion(std::f64::consts::FRAC_PI_2);
        let fwd90 = q90.rotate(&Vec3::new(0.0, 0.0, 1.0));
        assert!(fwd90.dist(&Vec3::new(0.0, 1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn margin_embeddings_have_controlled_similarity() {
        use crate::core::cosine_similarity;
        let a = margin_embedding(4, 0, 0.3);
        let b = margin_embedding(4, 1, 0.3);
        let c = margin_embedding(4, 2, 0.0);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert!((cosine_similarity(&a, &b).unwrap() - 0.3).abs() < 1e-12);
        assert!(cosine_similarity(&a, &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn empty_spec_produces_loadable_zero_frame_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SceneSpec {
            seed: 1,
            extent: (10.0, 10.0),
            embedding_dim: None,
            terrain_patches: Vec::new(),
            objects: Vec::new(),
            trajectory: Vec::new(),
            frame_spacing: 2.0,
            sensor_range: 25.0,
            camera_height: 1.5,
            terrain_margin: 0.0,
            embedding_noise: 0.02,
        };
        generate_scene(&spec, dir.path()).unwrap();
        let ds = load_scene(dir.path()).unwrap();
        assert!(ds.frames.is_empty());
    }

    #[test]
    fn generated_scene_passes_validation_and_has_ground_truth() {
        let dir = tempfile::tempdir().unwrap();
        generate_scene(&basic_spec(), dir.path()).unwrap();
        let ds = load_scene(dir.path()).unwrap();
        assert!(!ds.frames.is_empty());
        assert_eq!(ds.ground_truth.len(), 1);
        assert!(ds.embedding("query/bench").is_some());
        assert!(ds.embedding("terrain/sidewalk").is_some());
        // every frame has a terrain mask; object masks carry no terrain id
        for frame in &ds.frames {
            assert!(frame.masks.iter().any(|m| m.terrain == Some(0)));
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate_scene(&basic_spec(), d1.path()).unwrap();
        generate_scene(&basic_spec(), d2.path()).unwrap();
        for file in ["manifest.json", "frames.jsonl", "embeddings.jsonl"] {
            let a = std::fs::read(d1.path().join(file)).unwrap();
            let b = std::fs::read(d2.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs");
        }
        let frames1: Vec<_> = std::fs::read_dir(d1.path().join("frames"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        for name in frames1 {
            let a = std::fs::read(d1.path().join("frames").join(&name)).unwrap();
            let b = std::fs::read(d2.path().join("frames").join(&name)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn object_points_sit_on_voxel_centers() {
        let o = ObjectSpec {
            label: "x".into(),
            position: (10.0, 10.0),
            footprint: (4.0, 2.0),
            margin: 0.1,
        };
        let pts = object_points(&o);
        assert!(pts.len() >= 5);
        for p in &pts {
            for c in [p.x, p.y, p.z] {
                let rem = (c / LATTICE) - (c / LATTICE).floor();
                assert!((rem - 0.5).abs() < 1e-9, "{c} is not a voxel center");
            }
        }
    }

    #[test]
    fn spec_rejects_object_off_patch() {
        let mut spec = basic_spec();
        spec.objects[0].position = (100.0, 100.0);
        assert!(matches!(
            generate_scene(&spec, std::path::Path::new("/nonexistent")),
            Err(SceneGenError::BadSpec(_))
        ));
    }

    #[test]
    fn trajectory_frames_are_evenly_spaced() {
        let spec = basic_spec();
        let poses = trajectory_poses(&spec);
        // 50 m at 2 m spacing starting at the first waypoint
        assert_eq!(poses.len(), 25);
        for pair in poses.windows(2) {
            let d = pair[0].translation.dist(&pair[1].translation);
            assert!((d - 2.0).abs() < 1e-9);
        }
    }
}
