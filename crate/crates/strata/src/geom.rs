//! Small 2D polygon utilities shared by mask association, dataset
//! validation, and box overlap metrics.

/// Point-in-polygon test with the boundary counting as inside.
///
/// Crossing-number test plus an explicit on-segment check so vertices and
/// edge points are classified as inside.
pub fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let (px, py) = p;
    let mut inside = false;
    for i in 0..n {
        let (x1, y1) = poly[i];
        let (x2, y2) = poly[(i + 1) % n];
        if on_segment((x1, y1), (x2, y2), p) {
            return true;
        }
        if (y1 > py) != (y2 > py) {
            let xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1);
            if px < xint {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    if cross.abs() > 1e-9 {
        return false;
    }
    let dot = (p.0 - a.0) * (b.0 - a.0) + (p.1 - a.1) * (b.1 - a.1);
    let len2 = (b.0 - a.0).powi(2) + (b.1 - a.1).powi(2);
    dot >= -1e-9 && dot <= len2 + 1e-9
}

/// Signed area via the shoelace formula (positive for counter-clockwise).
pub fn signed_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let (x1, y1) = poly[i];
        let (x2, y2) = poly[(i + 1) % n];
        s += x1 * y2 - x2 * y1;
    }
    s / 2.0
}

/// Axis-aligned bounding box of a polygon: (min_x, min_y, max_x, max_y).
pub fn bbox(poly: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for &(x, y) in poly {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    (min_x, min_y, max_x, max_y)
}

/// Area of the intersection of two convex polygons (Sutherland-Hodgman).
/// Vertices may be in either winding order.
pub fn convex_intersection_area(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut subject: Vec<(f64, f64)> = a.to_vec();
    if signed_area(&subject) < 0.0 {
        subject.reverse();
    }
    let mut clip: Vec<(f64, f64)> = b.to_vec();
    if signed_area(&clip) < 0.0 {
        clip.reverse();
    }
    let m = clip.len();
    for i in 0..m {
        if subject.is_empty() {
            return 0.0;
        }
        let e1 = clip[i];
        let e2 = clip[(i + 1) % m];
        let input = std::mem::take(&mut subject);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let prev = input[(j + k - 1) % k];
            let cur_in = side(e1, e2, cur) >= 0.0;
            let prev_in = side(e1, e2, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    subject.push(line_intersect(prev, cur, e1, e2));
                }
                subject.push(cur);
            } else if prev_in {
                subject.push(line_intersect(prev, cur, e1, e2));
            }
        }
    }
    signed_area(&subject).abs()
}

fn side(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

fn line_intersect(p1: (f64, f64), p2: (f64, f64), a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d1 = side(a, b, p1);
    let d2 = side(a, b, p2);
    let t = d1 / (d1 - d2);
    (p1.0 + t * (p2.0 - p1.0), p1.1 + t * (p2.1 - p1.1))
}

/// Convex hull of a point set (monotone chain), counter-clockwise order.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}
