//! Grid-accelerated DBSCAN over 3D points.
//!
//! Determinism contract: seed points are visited in index order, cluster
//! expansion is breadth-first, and neighbor lists are sorted by point index.
//! A naive O(n^2) reference with the same visit order (see
//! [`crate::scenegen::oracle`]) therefore produces identical clusters.

use crate::core::Vec3;
use std::collections::{HashMap, VecDeque};

/// Cluster assignment: `clusters[k]` holds the point indices of cluster `k`
/// in ascending order; `noise` holds unclustered indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbscanResult {
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

struct CellIndex {
    eps: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl CellIndex {
    fn build(points: &[Vec3], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        CellIndex { eps, cells }
    }

    fn key(p: &Vec3, eps: f64) -> (i64, i64, i64) {
        (
            (p.x / eps).floor() as i64,
            (p.y / eps).floor() as i64,
            (p.z / eps).floor() as i64,
        )
    }

    /// Indices within `eps` of `p` (inclusive), sorted ascending.
    fn neighbors(&self, points: &[Vec3], p: &Vec3) -> Vec<usize> {
        let (kx, ky, kz) = Self::key(p, self.eps);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &i in ids {
                            if points[i].dist(p) <= self.eps {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Run DBSCAN with radius `eps` and density threshold `min_pts` (a point is a
/// core point when at least `min_pts` points, itself included, lie within
/// `eps`).
pub fn dbscan(points: &[Vec3], eps: f64, min_pts: usize) -> DbscanResult {
    assert!(eps > 0.0, "dbscan eps must be positive");
    let n = points.len();
    let index = CellIndex::build(points, eps);

    const UNVISITED: usize = usize::MAX;
    const NOISE: usize = usize::MAX - 1;
    let mut label = vec![UNVISITED; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    for seed in 0..n {
        if label[seed] != UNVISITED {
            continue;
        }
        let nbrs = index.neighbors(points, &points[seed]);
        if nbrs.len() < min_pts {
            label[seed] = NOISE;
            continue;
        }
        let cid = clusters.len();
        clusters.push(Vec::new());
        label[seed] = cid;
        clusters[cid].push(seed);
        let mut queue: VecDeque<usize> = nbrs.into_iter().filter(|&i| i != seed).collect();
        while let Some(i) = queue.pop_front() {
            if label[i] == NOISE {
                // border point reassigned to the first cluster reaching it
                label[i] = cid;
                clusters[cid].push(i);
                continue;
            }
            if label[i] != UNVISITED {
                continue;
            }
            label[i] = cid;
            clusters[cid].push(i);
            let nn = index.neighbors(points, &points[i]);
            if nn.len() >= min_pts {
                for j in nn {
                    if label[j] == UNVISITED || label[j] == NOISE {
                        queue.push_back(j);
                    }
                }
            }
        }
        clusters[cid].sort_unstable();
    }

    let noise = (0..n).filter(|&i| label[i] == NOISE).collect();
    DbscanResult { clusters, noise }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[(f64, f64, f64)]) -> Vec<Vec3> {
        coords.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect()
    }

    #[test]
    fn empty_input() {
        let r = dbscan(&[], 1.0, 3);
        assert!(r.clusters.is_empty());
        assert!(r.noise.is_empty());
    }

    #[test]
    fn all_noise_when_sparse() {
        let p = pts(&[(0.0, 0.0, 0.0), (10.0, 0.0, 0.0), (20.0, 0.0, 0.0)]);
        let r = dbscan(&p, 1.0, 2);
        assert!(r.clusters.is_empty());
        assert_eq!(r.noise, vec![0, 1, 2]);
    }

    #[test]
    fn two_clusters_and_noise() {
        let mut coords = Vec::new();
        for i in 0..6 {
            coords.push((i as f64 * 0.1, 0.0, 0.0));
        }
        for i in 0..4 {
            coords.push((100.0 + i as f64 * 0.1, 0.0, 0.0));
        }
        coords.push((500.0, 0.0, 0.0));
        let r = dbscan(&pts(&coords), 0.5, 3);
        assert_eq!(r.clusters.len(), 2);
        assert_eq!(r.clusters[0], vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(r.clusters[1], vec![6, 7, 8, 9]);
        assert_eq!(r.noise, vec![10]);
    }

    #[test]
    fn eps_is_inclusive() {
        // exactly eps apart, min_pts 2 -> one cluster
        let p = pts(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        let r = dbscan(&p, 1.0, 2);
        assert_eq!(r.clusters.len(), 1);
        assert_eq!(r.clusters[0], vec![0, 1]);
    }

    #[test]
    fn matches_naive_reference_on_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(0..120);
            let points: Vec<Vec3> = (0..n)
                .map(|_| {
                    Vec3::new(
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect();
            let eps = rng.random_range(0.3..1.5);
            let min_pts = rng.random_range(2..6);
            let got = dbscan(&points, eps, min_pts);
            let want = crate::scenegen::oracle::naive_dbscan(&points, eps, min_pts);
            assert_eq!(got, want);
        }
    }
}
