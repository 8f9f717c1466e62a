//! Average-linkage agglomerative clustering with fixed dendrogram cuts.

use super::{
    hierarchy_from_partitions, place_pair_distance, RegionConfig, RegionError, RegionHierarchy,
};
use crate::places::PlacesLayer;

/// Build the fixed-depth region hierarchy: run average-linkage agglomerative
/// clustering over all place nodes using the combined geometric + semantic
/// distance, then cut the dendrogram at each configured threshold. Produces
/// one level per threshold, finest first; levels where no merge crosses the
/// threshold repeat the previous partition, so the hierarchy always has
/// `cfg.agglo_thresholds.len()` levels.
pub fn agglomerative_regions(
    places: &PlacesLayer,
    cfg: &RegionConfig,
) -> Result<RegionHierarchy, RegionError> {
    cfg.validate()?;
    let n = places.nodes.len();
    if n == 0 {
        return Err(RegionError::NoPlaces);
    }

    // pairwise base distances
    let mut base = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = place_pair_distance(&places.nodes[i], &places.nodes[j], cfg)?;
            base[i * n + j] = d;
            base[j * n + i] = d;
        }
    }

    // active clusters: members (sorted place indices) and average-linkage
    // distances maintained with the Lance-Williams update
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut linkage = base;
    // merges in order: (height, resulting member set snapshot not needed;
    // we track partitions by replaying)
    let mut merge_heights: Vec<f64> = Vec::new();
    let mut merge_pairs: Vec<(usize, usize)> = Vec::new();

    for _ in 0..n.saturating_sub(1) {
        // find the closest active pair; ties broken by the lexicographically
        // smallest (min member of first, min member of second)
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if members[i].is_none() {
                continue;
            }
            for j in (i + 1)..n {
                if members[j].is_none() {
                    continue;
                }
                let d = linkage[i * n + j];
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        d < bd - 1e-12
                            || ((d - bd).abs() <= 1e-12
                                && (members[i].as_ref().unwrap()[0], members[j].as_ref().unwrap()[0])
                                    < (
                                        members[bi].as_ref().unwrap()[0],
                                        members[bj].as_ref().unwrap()[0],
                                    ))
                    }
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }
        let (height, a, b) = best.unwrap();
        let size_a = members[a].as_ref().unwrap().len() as f64;
        let size_b = members[b].as_ref().unwrap().len() as f64;
        // Lance-Williams average-linkage update for all other active clusters
        for k in 0..n {
            if k == a || k == b || members[k].is_none() {
                continue;
            }
            let d = (size_a * linkage[a * n + k] + size_b * linkage[b * n + k])
                / (size_a + size_b);
            linkage[a * n + k] = d;
            linkage[k * n + a] = d;
        }
        let mut merged = members[a].take().unwrap();
        merged.extend(members[b].take().unwrap());
        merged.sort_unstable();
        members[a] = Some(merged);
        merge_heights.push(height);
        merge_pairs.push((a, b));
    }

    // replay merges to extract one partition per threshold
    let mut partitions: Vec<Vec<Vec<u32>>> = Vec::with_capacity(cfg.agglo_thresholds.len());
    for &threshold in &cfg.agglo_thresholds {
        let mut clusters: Vec<Option<Vec<u32>>> =
            (0..n).map(|i| Some(vec![i as u32])).collect();
        for (idx, &(a, b)) in merge_pairs.iter().enumerate() {
            if merge_heights[idx] > threshold {
                break;
            }
            let other = clusters[b].take().unwrap();
            clusters[a].as_mut().unwrap().extend(other);
        }
        partitions.push(clusters.into_iter().flatten().collect());
    }
    // enforce nesting across thresholds even if floating-point tie ordering
    // produced a non-monotone cut (cannot happen for average linkage, where
    // merge heights are non-decreasing, but cheap to guarantee)
    Ok(hierarchy_from_partitions(partitions, places))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::testutil::{assert_nesting, layer};

    #[test]
    fn empty_layer_errors() {
        let l = layer(&[]);
        assert!(matches!(
            agglomerative_regions(&l, &RegionConfig::default()),
            Err(RegionError::NoPlaces)
        ));
    }

    #[test]
    fn single_node_gives_singleton_at_every_level() {
        let l = layer(&[((0.0, 0.0), vec![1.0, 0.0])]);
        let h = agglomerative_regions(&l, &RegionConfig::default()).unwrap();
        assert_eq!(h.num_levels(), 4);
        for level in 1..=4 {
            assert_eq!(h.partition_at_level(level), vec![vec![0]]);
        }
    }

    #[test]
    fn two_spatial_groups_merge_only_at_coarse_levels() {
        // two tight groups 150 m apart with identical embeddings:
        // within-group distances ~2 m, between-group ~150 m, so levels at
        // 50/100 keep them apart and levels at 200/400 merge them
        let e = vec![1.0, 0.0];
        let l = layer(&[
            ((0.0, 0.0), e.clone()),
            ((2.0, 0.0), e.clone()),
            ((150.0, 0.0), e.clone()),
            ((152.0, 0.0), e.clone()),
        ]);
        let h = agglomerative_regions(&l, &RegionConfig::default()).unwrap();
        assert_eq!(h.partition_at_level(1), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(h.partition_at_level(2), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(h.partition_at_level(3), vec![vec![0, 1, 2, 3]]);
        assert_eq!(h.partition_at_level(4), vec![vec![0, 1, 2, 3]]);
        assert_nesting(&h, 4);
    }

    #[test]
    fn semantic_term_separates_colocated_groups() {
        // all nodes within 10 m but two orthogonal embedding groups:
        // cross-group distance ~ 10 + 50 * 1 = 60 > 50, within ~ 10
        let a = vec![1.0, 0.0];
        let b = vec![0.0, 1.0];
        let l = layer(&[
            ((0.0, 0.0), a.clone()),
            ((10.0, 0.0), a.clone()),
            ((0.0, 5.0), b.clone()),
            ((10.0, 5.0), b.clone()),
        ]);
        let h = agglomerative_regions(&l, &RegionConfig::default()).unwrap();
        assert_eq!(h.partition_at_level(1), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(h.partition_at_level(2).len(), 1);
    }

    #[test]
    fn average_linkage_hand_computed_merge_order() {
        // 1D points at 0, 1, 5 with equal embeddings.
        // d(0,1)=1 merges first; then average linkage
        // d({0,1},{5}) = (5 + 4) / 2 = 4.5
        let e = vec![1.0];
        let l = layer(&[((0.0, 0.0), e.clone()), ((1.0, 0.0), e.clone()), ((5.0, 0.0), e)]);
        let cfg = RegionConfig {
            agglo_thresholds: vec![2.0, 4.4, 4.6, 10.0],
            ..Default::default()
        };
        let h = agglomerative_regions(&l, &cfg).unwrap();
        assert_eq!(h.partition_at_level(1), vec![vec![0, 1], vec![2]]);
        assert_eq!(h.partition_at_level(2), vec![vec![0, 1], vec![2]]);
        assert_eq!(h.partition_at_level(3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn always_four_levels_with_default_config() {
        let e = vec![1.0];
        let l = layer(&[((0.0, 0.0), e.clone()), ((1.0, 0.0), e)]);
        let h = agglomerative_regions(&l, &RegionConfig::default()).unwrap();
        assert_eq!(h.num_levels(), 4);
        assert_nesting(&h, 2);
    }

    #[test]
    fn deterministic_under_ties() {
        // four equidistant-ish nodes; run twice, expect identical output
        let e = vec![1.0];
        let l = layer(&[
            ((0.0, 0.0), e.clone()),
            ((1.0, 0.0), e.clone()),
            ((0.0, 1.0), e.clone()),
            ((1.0, 1.0), e),
        ]);
        let h1 = agglomerative_regions(&l, &RegionConfig::default()).unwrap();
        let h2 = agglomerative_regions(&l, &RegionConfig::default()).unwrap();
        assert_eq!(h1, h2);
    }
}
