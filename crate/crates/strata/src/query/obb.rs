//! Oriented bounding box fitting and overlap.

use super::{OrientedBox, QueryError};
use crate::core::Vec3;
use crate::geom;

/// Minimum half-extent; keeps degenerate clusters (single points, collinear
/// points) representable as boxes with positive volume.
const EXTENT_FLOOR: f64 = 0.01;

/// Fit an oriented box to a point set: yaw from the principal axis of the
/// 2D xy covariance, half-extents from min/max projections onto the rotated
/// axes (floored at 0.01 m), z extent from the raw z range.
pub fn oriented_bbox(points: &[Vec3]) -> Result<OrientedBox, QueryError> {
    if points.is_empty() {
        return Err(QueryError::NoPoints);
    }
    let n = points.len() as f64;
    let mut mx = 0.0;
    let mut my = 0.0;
    for p in points {
        mx += p.x;
        my += p.y;
    }
    mx /= n;
    my /= n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for p in points {
        let dx = p.x - mx;
        let dy = p.y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // principal axis angle of the 2x2 covariance matrix
    let yaw = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (c, s) = (yaw.cos(), yaw.sin());

    let mut lo_u = f64::INFINITY;
    let mut hi_u = f64::NEG_INFINITY;
    let mut lo_v = f64::INFINITY;
    let mut hi_v = f64::NEG_INFINITY;
    let mut lo_z = f64::INFINITY;
    let mut hi_z = f64::NEG_INFINITY;
    for p in points {
        let u = c * p.x + s * p.y;
        let v = -s * p.x + c * p.y;
        lo_u = lo_u.min(u);
        hi_u = hi_u.max(u);
        lo_v = lo_v.min(v);
        hi_v = hi_v.max(v);
        lo_z = lo_z.min(p.z);
        hi_z = hi_z.max(p.z);
    }
    let cu = 0.5 * (lo_u + hi_u);
    let cv = 0.5 * (lo_v + hi_v);
    Ok(OrientedBox {
        center: Vec3::new(c * cu - s * cv, s * cu + c * cv, 0.5 * (lo_z + hi_z)),
        extents: Vec3::new(
            (0.5 * (hi_u - lo_u)).max(EXTENT_FLOOR),
            (0.5 * (hi_v - lo_v)).max(EXTENT_FLOOR),
            (0.5 * (hi_z - lo_z)).max(EXTENT_FLOOR),
        ),
        yaw,
    })
}

impl OrientedBox {
    /// The box's xy footprint corners, counter-clockwise.
    pub fn corners_xy(&self) -> [(f64, f64); 4] {
        let (c, s) = (self.yaw.cos(), self.yaw.sin());
        let (ex, ey) = (self.extents.x, self.extents.y);
        let rot = |u: f64, v: f64| {
            (
                self.center.x + c * u - s * v,
                self.center.y + s * u + c * v,
            )
        };
        [rot(-ex, -ey), rot(ex, -ey), rot(ex, ey), rot(-ex, ey)]
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.extents.x * self.extents.y * self.extents.z
    }

    /// Whether a point lies inside or on the box, within `tol` meters.
    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        let (c, s) = (self.yaw.cos(), self.yaw.sin());
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        u.abs() <= self.extents.x + tol
            && v.abs() <= self.extents.y + tol
            && (p.z - self.center.z).abs() <= self.extents.z + tol
    }

    /// 3D intersection-over-union with another oriented box: convex polygon
    /// intersection in xy times interval overlap in z.
    pub fn iou(&self, other: &OrientedBox) -> f64 {
        let area = geom::convex_intersection_area(&self.corners_xy(), &other.corners_xy());
        let z_lo = (self.center.z - self.extents.z).max(other.center.z - other.extents.z);
        let z_hi = (self.center.z + self.extents.z).min(other.center.z + other.extents.z);
        let inter = area * (z_hi - z_lo).max(0.0);
        let union = self.volume() + other.volume() - inter;
        if union <= 0.0 {
            return 0.0;
        }
        inter / union
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(oriented_bbox(&[]), Err(QueryError::NoPoints)));
    }

    #[test]
    fn single_point_gives_floor_extents_at_point() {
        let b = oriented_bbox(&[v(3.0, -2.0, 1.5)]).unwrap();
        assert_eq!(b.center, v(3.0, -2.0, 1.5));
        assert_eq!(b.extents, v(0.01, 0.01, 0.01));
    }

    #[test]
    fn axis_aligned_unit_square() {
        let pts: Vec<Vec3> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
            .iter()
            .map(|&(x, y)| v(x, y, 0.0))
            .collect();
        let b = oriented_bbox(&pts).unwrap();
        // symmetric cloud: yaw is 0 or pi/2 modulo pi
        let m = b.yaw.rem_euclid(std::f64::consts::FRAC_PI_2);
        assert!(m.abs() < 1e-9 || (m - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert!((b.extents.x - 0.5).abs() < 1e-9);
        assert!((b.extents.y - 0.5).abs() < 1e-9);
        assert!((b.center.x - 0.5).abs() < 1e-9 && (b.center.y - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rotated_rectangle_recovers_yaw() {
        // 4x2 rectangle rotated by 30 degrees, sampled densely on its edges
        let yaw = 30f64.to_radians();
        let (c, s) = (yaw.cos(), yaw.sin());
        let mut pts = Vec::new();
        for i in 0..=40 {
            let t = -2.0 + i as f64 * 0.1;
            for &sv in &[-1.0, 1.0] {
                pts.push(v(c * t - s * sv, s * t + c * sv, 0.0));
            }
        }
        let b = oriented_bbox(&pts).unwrap();
        let diff = (b.yaw - yaw).rem_euclid(std::f64::consts::PI);
        assert!(diff < 1e-6 || (std::f64::consts::PI - diff) < 1e-6, "yaw {}", b.yaw);
        assert!((b.extents.x.max(b.extents.y) - 2.0).abs() < 1e-6);
        assert!((b.extents.x.min(b.extents.y) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn box_contains_all_input_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..40);
            let pts: Vec<Vec3> = (0..n)
                .map(|_| {
                    v(
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-3.0..3.0),
                    )
                })
                .collect();
            let b = oriented_bbox(&pts).unwrap();
            for p in &pts {
                assert!(b.contains(p, 1e-9), "{p:?} outside {b:?}");
            }
        }
    }

    #[test]
    fn iou_identical_boxes_is_one() {
        let b = oriented_bbox(&[v(0.0, 0.0, 0.0), v(2.0, 1.0, 1.0)]).unwrap();
        assert!((b.iou(&b) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn iou_disjoint_boxes_is_zero() {
        let a = OrientedBox {
            center: v(0.0, 0.0, 0.0),
            extents: v(1.0, 1.0, 1.0),
            yaw: 0.0,
        };
        let b = OrientedBox {
            center: v(10.0, 0.0, 0.0),
            extents: v(1.0, 1.0, 1.0),
            yaw: 0.3,
        };
        assert_eq!(a.iou(&b), 0.0);
    }

    #[test]
    fn iou_half_overlap_axis_aligned() {
        // unit cubes offset by half along x: inter 0.5, union 1.5
        let a = OrientedBox {
            center: v(0.0, 0.0, 0.0),
            extents: v(0.5, 0.5, 0.5),
            yaw: 0.0,
        };
        let b = OrientedBox {
            center: v(0.5, 0.0, 0.0),
            extents: v(0.5, 0.5, 0.5),
            yaw: 0.0,
        };
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn iou_rotation_invariant() {
        // rotate both boxes by the same angle: IoU unchanged
        let a0 = OrientedBox {
            center: v(0.0, 0.0, 0.0),
            extents: v(2.0, 1.0, 0.5),
            yaw: 0.0,
        };
        let b0 = OrientedBox {
            center: v(1.0, 0.5, 0.0),
            extents: v(2.0, 1.0, 0.5),
            yaw: 0.0,
        };
        let base = a0.iou(&b0);
        let phi = 0.7f64;
        let (c, s) = (phi.cos(), phi.sin());
        let rot = |b: &OrientedBox| OrientedBox {
            center: v(
                c * b.center.x - s * b.center.y,
                s * b.center.x + c * b.center.y,
                b.center.z,
            ),
            extents: b.extents,
            yaw: b.yaw + phi,
        };
        assert!((rot(&a0).iou(&rot(&b0)) - base).abs() < 1e-9);
    }
}
