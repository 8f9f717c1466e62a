//! Property-based invariants over the geometry, clustering, fusion, and
//! planning primitives.

use proptest::prelude::*;
use strata::core::{cosine_similarity, Embedding, Vec3};
use strata::dbscan::dbscan;
use strata::fusion::{merge_frame, FusionConfig, SemanticGlobalMap};
use strata::geom::{bbox, convex_hull, convex_intersection_area, signed_area};
use strata::query::oriented_bbox;

fn vec3_strategy() -> impl Strategy<Value = Vec3> {
    (
        -50.0f64..50.0,
        -50.0f64..50.0,
        0.0f64..5.0,
    )
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit_embedding(dim: usize) -> impl Strategy<Value = Embedding> {
    proptest::collection::vec(-1.0f64..1.0, dim)
        .prop_filter_map("nonzero", |values| {
            let e = Embedding::new(values);
            let n = e.norm();
            (n > 1e-6).then(|| e.scale(1.0 / n))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oriented_box_contains_all_its_points(points in proptest::collection::vec(vec3_strategy(), 1..40)) {
        let b = oriented_bbox(&points).unwrap();
        for p in &points {
            prop_assert!(b.contains(p, 1e-6), "{p:?} outside {b:?}");
        }
    }

    #[test]
    fn oriented_box_self_iou_is_one(points in proptest::collection::vec(vec3_strategy(), 1..20)) {
        let b = oriented_bbox(&points).unwrap();
        prop_assert!((b.iou(&b) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dbscan_partitions_the_input(
        points in proptest::collection::vec(vec3_strategy(), 0..60),
        eps in 0.5f64..10.0,
        min_pts in 1usize..6,
    ) {
        let r = dbscan(&points, eps, min_pts);
        let mut seen = std::collections::BTreeSet::new();
        for cluster in &r.clusters {
            prop_assert!(!cluster.is_empty());
            prop_assert!(cluster.windows(2).all(|w| w[0] < w[1]), "cluster not sorted");
            for &i in cluster {
                prop_assert!(seen.insert(i), "point {i} in two clusters");
            }
        }
        for &i in &r.noise {
            prop_assert!(seen.insert(i), "noise point {i} also clustered");
        }
        prop_assert_eq!(seen.len(), points.len());
    }

    #[test]
    fn dbscan_is_deterministic(
        points in proptest::collection::vec(vec3_strategy(), 0..40),
        eps in 0.5f64..5.0,
        min_pts in 1usize..5,
    ) {
        prop_assert_eq!(dbscan(&points, eps, min_pts), dbscan(&points, eps, min_pts));
    }

    #[test]
    fn hull_contains_input_and_intersection_is_bounded(
        pts_a in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..25),
        pts_b in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..25),
    ) {
        let a = convex_hull(&pts_a);
        let b = convex_hull(&pts_b);
        prop_assume!(a.len() >= 3 && b.len() >= 3);
        let area_a = signed_area(&a).abs();
        let area_b = signed_area(&b).abs();
        let inter = convex_intersection_area(&a, &b);
        prop_assert!(inter >= -1e-9);
        prop_assert!(inter <= area_a.min(area_b) + 1e-6);
        // hulls contain their generating points (via bounding box sanity)
        let (x0, y0, x1, y1) = bbox(&a);
        for &(x, y) in &pts_a {
            prop_assert!(x >= x0 - 1e-9 && x <= x1 + 1e-9 && y >= y0 - 1e-9 && y <= y1 + 1e-9);
        }
    }

    #[test]
    fn fusion_slots_stay_below_dedup_threshold(
        embeddings in proptest::collection::vec(unit_embedding(4), 1..50),
    ) {
        let cfg = FusionConfig::default();
        let mut map = SemanticGlobalMap::new(cfg.voxel_leaf, 4);
        let pos = Vec3::new(0.25, 0.25, 0.25);
        for e in &embeddings {
            merge_frame(&mut map, &[(pos, e, None)], &cfg).unwrap();
        }
        prop_assert_eq!(map.points.len(), 1);
        let slots = &map.points[0].slots;
        let total: u64 = slots.iter().map(|s| s.count).sum();
        prop_assert_eq!(total as usize, embeddings.len());
        for i in 0..slots.len() {
            for j in (i + 1)..slots.len() {
                let sim = cosine_similarity(&slots[i].embedding, &slots[j].embedding).unwrap();
                prop_assert!(sim < cfg.dedup_threshold);
            }
        }
    }
}
