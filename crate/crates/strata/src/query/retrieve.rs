//! Map-scan and graph-filtered retrieval strategies plus region monitoring.

use super::{obb::oriented_bbox, QueryConfig, QueryError, RetrievalResult, RetrievedBox};
use crate::core::{cosine_similarity, Embedding};
use crate::dbscan::dbscan;
use crate::fusion::{resolve_point_embedding, SemanticGlobalMap};
use crate::places::PlacesLayer;
use crate::regions::RegionHierarchy;

/// Map-scan retrieval: scan every map point, keep those whose resolved embedding has
/// cosine similarity ≥ alpha to the query, cluster the survivors with DBSCAN
/// (noise dropped), and emit one oriented box per cluster. Boxes are sorted
/// by descending score (max member similarity), ties by smallest member
/// point index.
pub fn retrieve_objects_ms(
    map: &SemanticGlobalMap,
    places: Option<&PlacesLayer>,
    query: &Embedding,
    cfg: &QueryConfig,
) -> Result<RetrievalResult, QueryError> {
    cfg.validate()?;
    if query.norm() == 0.0 {
        return Err(QueryError::BadConfig("query embedding has zero norm".into()));
    }
    let candidates: Vec<usize> = (0..map.points.len()).collect();
    retrieve_among(map, places, query, cfg, &candidates)
}

/// Graph-filtered retrieval: pre-filter the map through the scene graph. Regions at
/// `cfg.region_level` with embedding similarity ≥ alpha select their child
/// places; places with view similarity ≥ alpha select the map points nearest
/// to them; the map-scan pass then runs on that candidate subset only.
pub fn retrieve_objects_3dsg(
    hierarchy: &RegionHierarchy,
    places: &PlacesLayer,
    map: &SemanticGlobalMap,
    query: &Embedding,
    cfg: &QueryConfig,
) -> Result<RetrievalResult, QueryError> {
    cfg.validate()?;
    if query.norm() == 0.0 {
        return Err(QueryError::BadConfig("query embedding has zero norm".into()));
    }
    if hierarchy.levels.is_empty() {
        return Err(QueryError::MissingHierarchy);
    }
    if cfg.region_level > hierarchy.num_levels() {
        return Err(QueryError::BadRegionLevel {
            level: cfg.region_level,
            available: hierarchy.num_levels(),
        });
    }

    // regions above threshold
    let mut selected_places: Vec<u32> = Vec::new();
    for &rid in &hierarchy.levels[(cfg.region_level - 1) as usize] {
        let region = hierarchy.region(rid).unwrap();
        if cosine_similarity(&region.embedding, query)? >= cfg.alpha {
            selected_places.extend(hierarchy.member_places(rid));
        }
    }
    // their child places above threshold
    selected_places.retain(|&pid| {
        let node = places.node(pid).expect("hierarchy references existing places");
        cosine_similarity(&node.view_embedding, query).map_or(false, |s| s >= cfg.alpha)
    });
    if selected_places.is_empty() {
        return Ok(RetrievalResult::default());
    }
    selected_places.sort_unstable();

    // candidate points: those attributed (nearest in xy) to a selected place
    let candidates: Vec<usize> = (0..map.points.len())
        .filter(|&i| {
            places
                .nearest_node_xy(&map.points[i].position)
                .is_some_and(|pid| selected_places.binary_search(&pid).is_ok())
        })
        .collect();
    retrieve_among(map, Some(places), query, cfg, &candidates)
}

/// Shared retrieval core over an explicit candidate point subset.
fn retrieve_among(
    map: &SemanticGlobalMap,
    places: Option<&PlacesLayer>,
    query: &Embedding,
    cfg: &QueryConfig,
    candidates: &[usize],
) -> Result<RetrievalResult, QueryError> {
    let mut kept: Vec<usize> = Vec::new();
    let mut sims: Vec<f64> = Vec::new();
    for &i in candidates {
        let resolved = resolve_point_embedding(&map.points[i], cfg.mode)?;
        if resolved.norm() == 0.0 {
            // slots cancelled out; nothing meaningful to match against
            continue;
        }
        let s = cosine_similarity(&resolved, query)?;
        if s >= cfg.alpha {
            kept.push(i);
            sims.push(s);
        }
    }
    if kept.is_empty() {
        return Ok(RetrievalResult::default());
    }

    let positions: Vec<_> = kept.iter().map(|&i| map.points[i].position).collect();
    let clustering = dbscan(&positions, cfg.dbscan_eps, cfg.dbscan_min_pts);

    let mut boxes = Vec::new();
    for cluster in &clustering.clusters {
        let pts: Vec<_> = cluster.iter().map(|&k| positions[k]).collect();
        let bbox = oriented_bbox(&pts)?;
        let score = cluster
            .iter()
            .map(|&k| sims[k])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut point_indices: Vec<usize> = cluster.iter().map(|&k| kept[k]).collect();
        point_indices.sort_unstable();
        boxes.push(RetrievedBox {
            nearest_place_id: places.and_then(|l| l.nearest_node_xy(&bbox.center)),
            point_count: point_indices.len(),
            point_indices,
            score,
            bbox,
        });
    }
    boxes.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.point_indices[0].cmp(&b.point_indices[0]))
    });
    Ok(RetrievalResult { boxes })
}

/// Region monitoring: rank the regions at `cfg.region_level` by similarity to
/// the query, take the `cfg.top_k_regions` best (ties by region id), and
/// return their child place ids whose view similarity is ≥ alpha, ascending.
pub fn monitor_region(
    hierarchy: &RegionHierarchy,
    places: &PlacesLayer,
    query: &Embedding,
    cfg: &QueryConfig,
) -> Result<Vec<u32>, QueryError> {
    cfg.validate()?;
    if hierarchy.levels.is_empty() {
        return Err(QueryError::MissingHierarchy);
    }
    if cfg.region_level > hierarchy.num_levels() {
        return Err(QueryError::BadRegionLevel {
            level: cfg.region_level,
            available: hierarchy.num_levels(),
        });
    }
    let mut ranked: Vec<(f64, u32)> = hierarchy.levels[(cfg.region_level - 1) as usize]
        .iter()
        .map(|&rid| {
            let region = hierarchy.region(rid).unwrap();
            cosine_similarity(&region.embedding, query).map(|s| (s, rid))
        })
        .collect::<Result<_, _>>()?;
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));

    let mut out: Vec<u32> = Vec::new();
    for &(_, rid) in ranked.iter().take(cfg.top_k_regions) {
        for pid in hierarchy.member_places(rid) {
            let node = places.node(pid).expect("hierarchy references existing places");
            if cosine_similarity(&node.view_embedding, query)? >= cfg.alpha {
                out.push(pid);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Vec3;
    use crate::fusion::{MapPoint, ResolveMode, Slot};
    use crate::regions::agglomerative_regions;
    use crate::regions::RegionConfig;

    fn map_from(points: &[(f64, f64, f64, Vec<f64>)]) -> SemanticGlobalMap {
        let dim = points.first().map_or(0, |p| p.3.len());
        let pts = points
            .iter()
            .map(|(x, y, z, e)| MapPoint {
                position: Vec3::new(*x, *y, *z),
                slots: vec![Slot {
                    embedding: Embedding::new(e.clone()),
                    count: 1,
                }],
                terrain: None,
            })
            .collect();
        SemanticGlobalMap::from_points(0.5, dim, pts)
    }

    fn blob(cx: f64, cy: f64, e: &[f64]) -> Vec<(f64, f64, f64, Vec<f64>)> {
        // 6 points within eps=1.0 of each other: a guaranteed cluster
        (0..6)
            .map(|i| {
                (
                    cx + (i % 3) as f64 * 0.3,
                    cy + (i / 3) as f64 * 0.3,
                    0.5,
                    e.to_vec(),
                )
            })
            .collect()
    }

    #[test]
    fn single_matching_object_yields_one_box() {
        let mut pts = blob(0.0, 0.0, &[1.0, 0.0]);
        pts.extend(blob(30.0, 0.0, &[0.05, 1.0]));
        let map = map_from(&pts);
        let q = Embedding::new(vec![1.0, 0.0]);
        let r = retrieve_objects_ms(&map, None, &q, &QueryConfig::default()).unwrap();
        assert_eq!(r.boxes.len(), 1);
        assert_eq!(r.boxes[0].point_count, 6);
        assert_eq!(r.boxes[0].point_indices, (0..6).collect::<Vec<usize>>());
        assert!(r.boxes[0].score > 0.9);
    }

    #[test]
    fn orthogonal_query_returns_empty() {
        let map = map_from(&blob(0.0, 0.0, &[1.0, 0.0]));
        let q = Embedding::new(vec![0.0, 1.0]);
        let r = retrieve_objects_ms(&map, None, &q, &QueryConfig::default()).unwrap();
        assert!(r.boxes.is_empty());
    }

    #[test]
    fn accept_all_config_boxes_whole_map() {
        let mut pts = blob(0.0, 0.0, &[1.0, 0.0]);
        pts.extend(blob(100.0, 0.0, &[0.0, 1.0]));
        let map = map_from(&pts);
        let cfg = QueryConfig {
            alpha: -1.0,
            dbscan_eps: f64::INFINITY,
            dbscan_min_pts: 1,
            ..Default::default()
        };
        let q = Embedding::new(vec![1.0, 0.0]);
        let r = retrieve_objects_ms(&map, None, &q, &cfg).unwrap();
        assert_eq!(r.boxes.len(), 1);
        assert_eq!(r.boxes[0].point_count, map.points.len());
    }

    #[test]
    fn boxes_sorted_by_descending_score() {
        let mut pts = blob(0.0, 0.0, &[0.6, 0.8]);
        pts.extend(blob(50.0, 0.0, &[1.0, 0.0]));
        let map = map_from(&pts);
        let q = Embedding::new(vec![1.0, 0.0]);
        let cfg = QueryConfig {
            alpha: 0.25,
            ..Default::default()
        };
        let r = retrieve_objects_ms(&map, None, &q, &cfg).unwrap();
        assert_eq!(r.boxes.len(), 2);
        assert!(r.boxes[0].score > r.boxes[1].score);
        // the exact-match blob (indices 6..12) ranks first
        assert_eq!(r.boxes[0].point_indices[0], 6);
    }

    /// A places layer with one node per given position.
    fn simple_places(nodes: &[((f64, f64), Vec<f64>)]) -> PlacesLayer {
        crate::regions::testutil::layer(nodes)
    }

    #[test]
    fn accept_all_3dsg_matches_ms_exactly() {
        let mut pts = blob(0.0, 0.0, &[1.0, 0.0]);
        pts.extend(blob(40.0, 0.0, &[0.0, 1.0]));
        let map = map_from(&pts);
        let places = simple_places(&[((0.0, 0.0), vec![1.0, 0.0]), ((40.0, 0.0), vec![0.0, 1.0])]);
        let hierarchy = agglomerative_regions(&places, &RegionConfig::default()).unwrap();
        let cfg = QueryConfig {
            alpha: -1.0,
            ..Default::default()
        };
        let q = Embedding::new(vec![1.0, 0.0]);
        let ms = retrieve_objects_ms(&map, Some(&places), &q, &cfg).unwrap();
        let sg = retrieve_objects_3dsg(&hierarchy, &places, &map, &q, &cfg).unwrap();
        assert_eq!(ms, sg);
    }

    #[test]
    fn region_filter_excludes_out_of_region_matches() {
        // the object's points match the query but sit nearest to a place
        // whose region embedding is orthogonal to the query
        let map = map_from(&blob(40.0, 0.0, &[1.0, 0.0]));
        let places = simple_places(&[((0.0, 0.0), vec![1.0, 0.0]), ((40.0, 0.0), vec![0.0, 1.0])]);
        let hierarchy = agglomerative_regions(&places, &RegionConfig::default()).unwrap();
        let cfg = QueryConfig::default();
        let q = Embedding::new(vec![1.0, 0.0]);
        let ms = retrieve_objects_ms(&map, Some(&places), &q, &cfg).unwrap();
        let sg = retrieve_objects_3dsg(&hierarchy, &places, &map, &q, &cfg).unwrap();
        assert_eq!(ms.boxes.len(), 1);
        assert!(sg.boxes.is_empty());
    }

    #[test]
    fn subset_property_holds() {
        let mut pts = blob(0.0, 0.0, &[1.0, 0.0]);
        pts.extend(blob(40.0, 0.0, &[0.9, 0.44]));
        let map = map_from(&pts);
        let places = simple_places(&[((0.0, 0.0), vec![1.0, 0.0]), ((40.0, 0.0), vec![0.0, 1.0])]);
        let hierarchy = agglomerative_regions(&places, &RegionConfig::default()).unwrap();
        let cfg = QueryConfig::default();
        let q = Embedding::new(vec![1.0, 0.0]);
        let ms = retrieve_objects_ms(&map, Some(&places), &q, &cfg).unwrap();
        let sg = retrieve_objects_3dsg(&hierarchy, &places, &map, &q, &cfg).unwrap();
        let ms_points: std::collections::BTreeSet<usize> = ms
            .boxes
            .iter()
            .flat_map(|b| b.point_indices.iter().copied())
            .collect();
        for b in &sg.boxes {
            for i in &b.point_indices {
                assert!(ms_points.contains(i));
            }
        }
    }

    #[test]
    fn monitor_top_k_all_regions_alpha_disabled_returns_everything() {
        let places = simple_places(&[
            ((0.0, 0.0), vec![1.0, 0.0]),
            ((200.0, 0.0), vec![0.0, 1.0]),
            ((400.0, 0.0), vec![0.7, 0.7]),
        ]);
        let hierarchy = agglomerative_regions(&places, &RegionConfig::default()).unwrap();
        let cfg = QueryConfig {
            alpha: -1.0,
            top_k_regions: hierarchy.finest_level().len(),
            ..Default::default()
        };
        let q = Embedding::new(vec![1.0, 0.0]);
        let got = monitor_region(&hierarchy, &places, &q, &cfg).unwrap();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn monitor_exact_match_ranks_first() {
        let places = simple_places(&[
            ((0.0, 0.0), vec![1.0, 0.0]),
            ((1.0, 0.0), vec![1.0, 0.0]),
            ((500.0, 0.0), vec![0.0, 1.0]),
        ]);
        let hierarchy = agglomerative_regions(&places, &RegionConfig::default()).unwrap();
        let cfg = QueryConfig {
            alpha: -1.0,
            top_k_regions: 1,
            ..Default::default()
        };
        let q = Embedding::new(vec![1.0, 0.0]);
        let got = monitor_region(&hierarchy, &places, &q, &cfg).unwrap();
        assert_eq!(got, vec![0, 1]);
    }

    #[test]
    fn resolve_mode_is_respected() {
        // one point with two slots: dominant count points away from query
        let map = SemanticGlobalMap::from_points(
            0.5,
            2,
            (0..6)
                .map(|i| MapPoint {
                    position: Vec3::new(i as f64 * 0.3, 0.0, 0.0),
                    slots: vec![
                        Slot {
                            embedding: Embedding::new(vec![0.0, 1.0]),
                            count: 10,
                        },
                        Slot {
                            embedding: Embedding::new(vec![1.0, 0.0]),
                            count: 1,
                        },
                    ],
                    terrain: None,
                })
                .collect(),
        );
        let q = Embedding::new(vec![1.0, 0.0]);
        // max mode resolves to the orthogonal dominant slot: similarity 0,
        // below any positive alpha
        let max_cfg = QueryConfig {
            alpha: 0.05,
            mode: ResolveMode::Max,
            ..Default::default()
        };
        let max = retrieve_objects_ms(&map, None, &q, &max_cfg).unwrap();
        assert!(max.boxes.is_empty());
        // count-weighted mean keeps a small component toward the query
        let avg_cfg = QueryConfig {
            alpha: 0.05,
            mode: ResolveMode::Avg,
            ..Default::default()
        };
        let avg = retrieve_objects_ms(&map, None, &q, &avg_cfg).unwrap();
        assert_eq!(avg.boxes.len(), 1);
    }
}
