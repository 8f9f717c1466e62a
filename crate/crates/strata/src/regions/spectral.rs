//! Recursive spectral bisection of the place graph.

use super::{
    hierarchy_from_partitions, place_pair_distance, RegionConfig, RegionError, RegionHierarchy,
};
use crate::core::cosine_similarity;
use crate::places::PlacesLayer;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Why recursion stopped on a leaf cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralStop {
    /// Semantic spread at or below `spectral_sem_diff_max`.
    SemDiff,
    /// Axis-aligned 2D bounding-box area at or below `spectral_area_max`.
    BboxArea,
    /// Two or fewer members.
    Size,
    /// The Fiedler split put every member on one side.
    DegenerateSplit,
}

enum Tree {
    Leaf {
        members: Vec<usize>,
        reason: SpectralStop,
    },
    Split {
        members: Vec<usize>,
        children: [Box<Tree>; 2],
    },
}

/// Build a variable-depth region hierarchy by recursively bisecting the
/// place set along the Fiedler vector of the symmetric normalized Laplacian
/// of the affinity matrix `A_ij = exp(-d_ij / lambda_semantic)`. Recursion on
/// a cluster stops when its semantic spread, bounding-box area, or size falls
/// at or below the configured thresholds. Leaves become the level-1 regions;
/// the recursion tree's depth layers form the coarser levels. Also returns
/// the stop reason of each level-1 region, in level order.
pub fn spectral_regions(
    places: &PlacesLayer,
    cfg: &RegionConfig,
) -> Result<(RegionHierarchy, Vec<SpectralStop>), RegionError> {
    cfg.validate()?;
    let n = places.nodes.len();
    if n == 0 {
        return Err(RegionError::NoPlaces);
    }

    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = place_pair_distance(&places.nodes[i], &places.nodes[j], cfg)?;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let tree = bisect((0..n).collect(), places, &dist, n, cfg)?;

    // flatten the tree into depth layers
    let mut max_depth = 0;
    collect_max_depth(&tree, 0, &mut max_depth);
    let num_levels = max_depth + 1;
    let mut partitions: Vec<Vec<Vec<u32>>> = vec![Vec::new(); num_levels];
    let mut leaf_reasons: Vec<(u32, SpectralStop)> = Vec::new();
    assign_levels(
        &tree,
        0,
        max_depth,
        &mut partitions,
        &mut leaf_reasons,
        places,
    );
    // order leaf reasons the way hierarchy_from_partitions orders level-1
    // regions: by smallest member place id
    leaf_reasons.sort_by_key(|&(min_id, _)| min_id);
    let reasons = leaf_reasons.into_iter().map(|(_, r)| r).collect();
    Ok((hierarchy_from_partitions(partitions, places), reasons))
}

fn collect_max_depth(tree: &Tree, depth: usize, max_depth: &mut usize) {
    match tree {
        Tree::Leaf { .. } => *max_depth = (*max_depth).max(depth),
        Tree::Split { children, .. } => {
            collect_max_depth(&children[0], depth + 1, max_depth);
            collect_max_depth(&children[1], depth + 1, max_depth);
        }
    }
}

/// Place each tree node's member set into the levels it represents. With D
/// the deepest leaf depth, level `l` (1-based, finest first) consists of the
/// nodes at tree depth `D - l + 1`, with shallower leaves carried down so
/// every level is a complete partition.
fn assign_levels(
    tree: &Tree,
    depth: usize,
    max_depth: usize,
    partitions: &mut [Vec<Vec<u32>>],
    leaf_reasons: &mut Vec<(u32, SpectralStop)>,
    places: &PlacesLayer,
) {
    let ids = |members: &[usize]| -> Vec<u32> {
        members.iter().map(|&i| places.nodes[i].id).collect()
    };
    match tree {
        Tree::Leaf { members, reason } => {
            // a leaf at depth d covers levels 1 ..= max_depth - d + 1
            let cluster = ids(members);
            for level in 0..=(max_depth - depth) {
                partitions[level].push(cluster.clone());
            }
            leaf_reasons.push((*cluster.iter().min().unwrap(), *reason));
        }
        Tree::Split { members, children } => {
            // an internal node at depth d appears only at level max_depth - d + 1
            partitions[max_depth - depth].push(ids(members));
            assign_levels(&children[0], depth + 1, max_depth, partitions, leaf_reasons, places);
            assign_levels(&children[1], depth + 1, max_depth, partitions, leaf_reasons, places);
        }
    }
}

fn bisect(
    members: Vec<usize>,
    places: &PlacesLayer,
    dist: &[f64],
    n: usize,
    cfg: &RegionConfig,
) -> Result<Tree, RegionError> {
    if members.len() <= 2 {
        return Ok(Tree::Leaf {
            members,
            reason: SpectralStop::Size,
        });
    }
    if cluster_sem_diff(&members, places)? <= cfg.spectral_sem_diff_max {
        return Ok(Tree::Leaf {
            members,
            reason: SpectralStop::SemDiff,
        });
    }
    if bbox_area(&members, places) <= cfg.spectral_area_max {
        return Ok(Tree::Leaf {
            members,
            reason: SpectralStop::BboxArea,
        });
    }

    let fiedler = fiedler_vector(&members, dist, n, cfg.lambda_semantic);
    let mut left = Vec::new(); // nonnegative side (zero entries included)
    let mut right = Vec::new();
    for (local, &global) in members.iter().enumerate() {
        if fiedler[local] >= 0.0 {
            left.push(global);
        } else {
            right.push(global);
        }
    }
    if left.is_empty() || right.is_empty() {
        return Ok(Tree::Leaf {
            members,
            reason: SpectralStop::DegenerateSplit,
        });
    }
    let a = bisect(left, places, dist, n, cfg)?;
    let b = bisect(right, places, dist, n, cfg)?;
    Ok(Tree::Split {
        members,
        children: [Box::new(a), Box::new(b)],
    })
}

/// Difference between the most and least similar member relative to the
/// cluster-mean embedding.
fn cluster_sem_diff(members: &[usize], places: &PlacesLayer) -> Result<f64, RegionError> {
    let mean = crate::core::Embedding::mean(
        members.iter().map(|&i| &places.nodes[i].view_embedding),
    )
    .expect("cluster is nonempty");
    if mean.norm() == 0.0 {
        // all-cancelling embeddings: no usable semantic spread, treat as tight
        return Ok(0.0);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in members {
        let c = cosine_similarity(&places.nodes[i].view_embedding, &mean)?;
        lo = lo.min(c);
        hi = hi.max(c);
    }
    Ok(hi - lo)
}

fn bbox_area(members: &[usize], places: &PlacesLayer) -> f64 {
    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &i in members {
        let p = places.nodes[i].position;
        min.0 = min.0.min(p.0);
        min.1 = min.1.min(p.1);
        max.0 = max.0.max(p.0);
        max.1 = max.1.max(p.1);
    }
    (max.0 - min.0) * (max.1 - min.1)
}

/// Second-smallest eigenvector of `L_sym = I - D^{-1/2} A D^{-1/2}` over the
/// cluster's members, oriented so the entry of the lowest-index member is
/// nonnegative.
fn fiedler_vector(members: &[usize], dist: &[f64], n: usize, lambda: f64) -> Vec<f64> {
    let m = members.len();
    let mut affinity = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in (a + 1)..m {
            let w = (-dist[members[a] * n + members[b]] / lambda).exp();
            affinity[(a, b)] = w;
            affinity[(b, a)] = w;
        }
    }
    let degree: Vec<f64> = (0..m).map(|i| affinity.row(i).sum()).collect();
    let mut laplacian = DMatrix::identity(m, m);
    for a in 0..m {
        for b in 0..m {
            if a != b && degree[a] > 0.0 && degree[b] > 0.0 {
                laplacian[(a, b)] = -affinity[(a, b)] / (degree[a] * degree[b]).sqrt();
            }
        }
    }
    let eigen = SymmetricEigen::new(laplacian);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eigen.eigenvalues[i].partial_cmp(&eigen.eigenvalues[j]).unwrap());
    let col = eigen.eigenvectors.column(order[1]);
    let mut v: Vec<f64> = col.iter().copied().collect();
    // members are visited in ascending global index, so local 0 is the
    // lowest-id node; flip the vector if its entry is negative
    if v[0] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::testutil::{assert_nesting, layer};

    fn cfg() -> RegionConfig {
        RegionConfig::default()
    }

    #[test]
    fn empty_layer_errors() {
        assert!(spectral_regions(&layer(&[]), &cfg()).is_err());
    }

    #[test]
    fn tight_identical_cluster_never_splits() {
        // identical embeddings in a 10x10 m patch: both thresholds satisfied
        let e = vec![1.0, 0.0];
        let l = layer(&[
            ((0.0, 0.0), e.clone()),
            ((10.0, 0.0), e.clone()),
            ((0.0, 10.0), e.clone()),
            ((10.0, 10.0), e),
        ]);
        let (h, reasons) = spectral_regions(&l, &cfg()).unwrap();
        assert_eq!(h.num_levels(), 1);
        assert_eq!(h.partition_at_level(1), vec![vec![0, 1, 2, 3]]);
        assert_eq!(reasons, vec![SpectralStop::SemDiff]);
    }

    #[test]
    fn three_nodes_stop_by_size_after_at_most_one_split() {
        // spread in both axes so the bbox-area rule cannot stop the root
        let l = layer(&[
            ((0.0, 0.0), vec![1.0, 0.0]),
            ((500.0, 500.0), vec![0.0, 1.0]),
            ((502.0, 500.0), vec![0.0, 1.0]),
        ]);
        let (h, reasons) = spectral_regions(&l, &cfg()).unwrap();
        assert!(h.num_levels() <= 2);
        for r in reasons {
            assert_eq!(r, SpectralStop::Size);
        }
        assert_nesting(&h, 3);
    }

    #[test]
    fn well_separated_groups_split_exactly_on_first_bisection() {
        // two orthogonal-embedding groups 500 m apart; affinity is
        // near-block-diagonal so the Fiedler split must recover the groups
        let a = vec![1.0, 0.0];
        let b = vec![0.0, 1.0];
        let mut nodes = Vec::new();
        // each group spans <= 50 x 40 m (area <= 2500: stops after one cut);
        // unequal group sizes keep the root's cosine spread above the
        // sem-diff threshold (equal-size orthogonal groups are equidistant
        // from the mean embedding and would stop the root immediately)
        for i in 0..6 {
            nodes.push(((i as f64 * 10.0, (i % 2) as f64 * 40.0), a.clone()));
        }
        for i in 0..3 {
            nodes.push(((500.0 + i as f64 * 10.0, (i % 2) as f64 * 40.0), b.clone()));
        }
        let l = layer(&nodes);
        let (h, _) = spectral_regions(&l, &cfg()).unwrap();
        let top = h.partition_at_level(h.num_levels());
        let below = h.partition_at_level(h.num_levels() - 1);
        assert_eq!(top, vec![(0..9).collect::<Vec<u32>>()]);
        assert_eq!(below.len(), 2);
        assert_eq!(below[0], (0..6).collect::<Vec<u32>>());
        assert_eq!(below[1], (6..9).collect::<Vec<u32>>());
        assert_nesting(&h, 9);
    }

    #[test]
    fn leaves_respect_a_stopping_rule() {
        // scattered nodes with varied embeddings: whatever the tree shape,
        // every leaf must satisfy one of the three stop rules (degenerate
        // splits included, but none are expected here)
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut nodes = Vec::new();
        for _ in 0..40 {
            let pos = (rng.random_range(0.0..800.0), rng.random_range(0.0..800.0));
            let e = vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            nodes.push((pos, e));
        }
        let l = layer(&nodes);
        let c = cfg();
        let (h, reasons) = spectral_regions(&l, &c).unwrap();
        assert_nesting(&h, 40);
        let leaves = h.partition_at_level(1);
        assert_eq!(leaves.len(), reasons.len());
        for (cluster, reason) in leaves.iter().zip(&reasons) {
            let idx: Vec<usize> = cluster.iter().map(|&p| p as usize).collect();
            match reason {
                SpectralStop::Size => assert!(idx.len() <= 2),
                SpectralStop::SemDiff => assert!(
                    cluster_sem_diff(&idx, &l).unwrap() <= c.spectral_sem_diff_max
                ),
                SpectralStop::BboxArea => {
                    assert!(bbox_area(&idx, &l) <= c.spectral_area_max)
                }
                SpectralStop::DegenerateSplit => {}
            }
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let l = layer(&[
            ((0.0, 0.0), vec![1.0, 0.2]),
            ((100.0, 0.0), vec![0.2, 1.0]),
            ((0.0, 100.0), vec![1.0, 1.0]),
            ((100.0, 100.0), vec![-0.3, 0.8]),
            ((50.0, 400.0), vec![0.6, -0.6]),
        ]);
        let r1 = spectral_regions(&l, &cfg()).unwrap();
        let r2 = spectral_regions(&l, &cfg()).unwrap();
        assert_eq!(r1, r2);
    }
}
