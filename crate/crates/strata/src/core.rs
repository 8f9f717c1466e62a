//! Foundational geometric and semantic types shared by all modules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("embedding dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero-norm embedding")]
    ZeroNorm,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("quaternion norm {0} deviates from 1 by more than 1e-9")]
    NonUnitQuaternion(f64),
    #[error("invalid camera intrinsics: {0}")]
    BadIntrinsics(String),
}

/// A point or translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn add(&self, o: &Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(&self, o: &Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dist(&self, o: &Vec3) -> f64 {
        self.sub(o).norm()
    }

    /// Euclidean distance ignoring z.
    pub fn dist_xy(&self, o: &Vec3) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Unit quaternion stored as (w, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Rotation of `angle` radians about the +z axis.
    pub fn from_yaw(angle: f64) -> Self {
        let h = angle / 2.0;
        Quaternion::new(h.cos(), 0.0, 0.0, h.sin())
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product `self * other` (applies `other` first).
    pub fn mul(&self, other: &Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * other.w - self.x * other.x - self.y * other.y - self.z * other.z,
            self.w * other.x + self.x * other.w + self.y * other.z - self.z * other.y,
            self.w * other.y - self.x * other.z + self.y * other.w + self.z * other.x,
            self.w * other.z + self.x * other.y - self.y * other.x + self.z * other.w,
        )
    }

    /// Rotate a vector by this quaternion (assumed unit norm).
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        // v' = v + 2w(q×v) + 2 q×(q×v)
        let qv = Vec3::new(self.x, self.y, self.z);
        let c1 = cross(&qv, v);
        let c2 = cross(&qv, &c1);
        Vec3::new(
            v.x + 2.0 * (self.w * c1.x + c2.x),
            v.y + 2.0 * (self.w * c1.y + c2.y),
            v.z + 2.0 * (self.w * c1.z + c2.z),
        )
    }
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    Vec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

/// Rigid transform (rotation then translation), sensor frame to world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub translation: Vec3,
    pub rotation: Quaternion,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { translation: Vec3::ZERO, rotation: Quaternion::IDENTITY };

    pub fn new(translation: Vec3, rotation: Quaternion) -> Self {
        Pose { translation, rotation }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if !self.translation.is_finite() {
            return Err(CoreError::NonFinite("pose translation"));
        }
        let n = self.rotation.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(CoreError::NonUnitQuaternion(n));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Pose {
        let rinv = self.rotation.conjugate();
        let t = rinv.rotate(&self.translation);
        Pose::new(Vec3::new(-t.x, -t.y, -t.z), rinv)
    }
}

/// Apply `pose` to a point: rotation first, then translation.
pub fn transform_point(p: &Vec3, pose: &Pose) -> Vec3 {
    pose.rotation.rotate(p).add(&pose.translation)
}

/// A fixed-length semantic feature vector. Stored unnormalized; similarity
/// is always cosine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    pub values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Embedding { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Embedding {
        Embedding::new(self.values.iter().map(|v| v * s).collect())
    }

    pub fn add(&self, o: &Embedding) -> Embedding {
        debug_assert_eq!(self.dim(), o.dim());
        Embedding::new(
            self.values
                .iter()
                .zip(&o.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Unweighted mean of a nonempty slice of embeddings.
    pub fn mean<'a, I>(iter: I) -> Option<Embedding>
    where
        I: IntoIterator<Item = &'a Embedding>,
    {
        let mut it = iter.into_iter();
        let first = it.next()?;
        let mut acc = first.clone();
        let mut n = 1usize;
        for e in it {
            acc = acc.add(e);
            n += 1;
        }
        Some(acc.scale(1.0 / n as f64))
    }
}

/// Cosine similarity of two embeddings, in [-1, 1].
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, CoreError> {
    if a.dim() != b.dim() {
        return Err(CoreError::DimensionMismatch(a.dim(), b.dim()));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Err(CoreError::ZeroNorm);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Ground-surface category governing traversability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerrainClass {
    pub id: u32,
    pub name: String,
}

/// Pinhole camera parameters in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(CoreError::BadIntrinsics(format!(
                "fx={} fy={} must be positive",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(CoreError::BadIntrinsics(format!(
                "cx={} outside [0,{})",
                self.cx, self.width
            )));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(CoreError::BadIntrinsics(format!(
                "cy={} outside [0,{})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    /// Horizontal half field-of-view in radians.
    pub fn half_fov(&self) -> f64 {
        (self.width as f64 / (2.0 * self.fx)).atan()
    }
}
