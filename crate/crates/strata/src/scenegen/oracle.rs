//! Brute-force reference implementations used as test oracles.

use crate::core::{cosine_similarity, Embedding, Vec3};
use crate::dbscan::DbscanResult;
use crate::fusion::{resolve_point_embedding, SemanticGlobalMap};
use crate::places::PlacesLayer;
use crate::planner::{PathResult, PlannerError, TerrainPolicy};
use crate::query::{oriented_bbox, QueryConfig, QueryError, RetrievalResult, RetrievedBox};

/// Textbook O(n²) DBSCAN with the same determinism contract as
/// [`crate::dbscan::dbscan`]: seeds in index order, FIFO expansion, neighbor
/// lists ascending.
pub fn naive_dbscan(points: &[Vec3], eps: f64, min_pts: usize) -> DbscanResult {
    let n = points.len();
    let neighbors = |p: usize| -> Vec<usize> {
        (0..n).filter(|&q| points[p].dist(&points[q]) <= eps).collect()
    };

    const UNVISITED: usize = usize::MAX;
    const NOISE: usize = usize::MAX - 1;
    let mut label = vec![UNVISITED; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if label[seed] != UNVISITED {
            continue;
        }
        let nbrs = neighbors(seed);
        if nbrs.len() < min_pts {
            label[seed] = NOISE;
            continue;
        }
        let cid = clusters.len();
        clusters.push(vec![seed]);
        label[seed] = cid;
        let mut queue: std::collections::VecDeque<usize> =
            nbrs.into_iter().filter(|&i| i != seed).collect();
        while let Some(i) = queue.pop_front() {
            if label[i] == NOISE {
                label[i] = cid;
                clusters[cid].push(i);
                continue;
            }
            if label[i] != UNVISITED {
                continue;
            }
            label[i] = cid;
            clusters[cid].push(i);
            let nn = neighbors(i);
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
    DbscanResult {
        clusters,
        noise: (0..n).filter(|&i| label[i] == NOISE).collect(),
    }
}

/// Exhaustive-scan retrieval reference: linear similarity scan, naive DBSCAN,
/// identical box assembly and ordering rules to `retrieve_objects_ms`.
pub fn oracle_retrieval(
    map: &SemanticGlobalMap,
    places: Option<&PlacesLayer>,
    query: &Embedding,
    cfg: &QueryConfig,
) -> Result<RetrievalResult, QueryError> {
    cfg.validate()?;
    if query.norm() == 0.0 {
        return Err(QueryError::BadConfig("query embedding has zero norm".into()));
    }
    let mut kept = Vec::new();
    let mut sims = Vec::new();
    for (i, p) in map.points.iter().enumerate() {
        let e = resolve_point_embedding(p, cfg.mode)?;
        if e.norm() == 0.0 {
            continue;
        }
        let s = cosine_similarity(&e, query)?;
        if s >= cfg.alpha {
            kept.push(i);
            sims.push(s);
        }
    }
    let positions: Vec<Vec3> = kept.iter().map(|&i| map.points[i].position).collect();
    let clustering = naive_dbscan(&positions, cfg.dbscan_eps, cfg.dbscan_min_pts);
    let mut boxes = Vec::new();
    for cluster in &clustering.clusters {
        let pts: Vec<Vec3> = cluster.iter().map(|&k| positions[k]).collect();
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

/// Textbook Dijkstra reference for `plan_path`, with the same edge weighting,
/// prohibition filtering, and lexicographic tie-break.
pub fn oracle_shortest_path(
    layer: &PlacesLayer,
    start: u32,
    goal: u32,
    policy: &TerrainPolicy,
) -> Result<PathResult, PlannerError> {
    policy.validate()?;
    let n = layer.nodes.len();
    if layer.node(start).is_none() {
        return Err(PlannerError::UnknownNode(start));
    }
    if layer.node(goal).is_none() {
        return Err(PlannerError::UnknownNode(goal));
    }
    if !policy.allow_prohibited_endpoints {
        for id in [start, goal] {
            let terrain = layer.nodes[id as usize].terrain;
            if policy.prohibited.contains(&terrain) {
                return Err(PlannerError::ProhibitedEndpoint { node: id, terrain });
            }
        }
    }
    if start == goal {
        return Ok(PathResult {
            nodes: vec![start],
            total_cost: 0.0,
            total_length: 0.0,
        });
    }

    let build_adjacency = |apply_policy: bool| -> Vec<Vec<(usize, f64)>> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b, len) in &layer.edges {
            if apply_policy {
                let blocked = |id: u32| {
                    let terrain = layer.nodes[id as usize].terrain;
                    policy.prohibited.contains(&terrain)
                        && !(policy.allow_prohibited_endpoints && (id == start || id == goal))
                };
                if blocked(a) || blocked(b) {
                    continue;
                }
            }
            let mult = |id: u32| {
                let terrain = layer.nodes[id as usize].terrain;
                if apply_policy {
                    policy.multiplier.get(&terrain).copied().unwrap_or(1.0)
                } else {
                    1.0
                }
            };
            let cost = len * mult(a).max(mult(b));
            adj[a as usize].push((b as usize, cost));
            adj[b as usize].push((a as usize, cost));
        }
        for list in &mut adj {
            list.sort_by(|x, y| x.0.cmp(&y.0));
        }
        adj
    };

    // plain O(n²) Dijkstra from the goal
    let run = |adj: &[Vec<(usize, f64)>]| -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[goal as usize] = 0.0;
        for _ in 0..n {
            let mut u = None;
            for v in 0..n {
                if !done[v] && dist[v].is_finite() {
                    if u.map_or(true, |b: usize| dist[v] < dist[b]) {
                        u = Some(v);
                    }
                }
            }
            let Some(u) = u else { break };
            done[u] = true;
            for &(v, w) in &adj[u] {
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                }
            }
        }
        dist
    };

    let adj = build_adjacency(true);
    let dist = run(&adj);
    if dist[start as usize].is_infinite() {
        let open = run(&build_adjacency(false));
        return if open[start as usize].is_finite() {
            Err(PlannerError::UnreachableProhibited)
        } else {
            Err(PlannerError::UnreachableStructural)
        };
    }

    let mut nodes = vec![start];
    let mut total_cost = 0.0;
    let mut total_length = 0.0;
    let mut current = start as usize;
    while current != goal as usize {
        let (v, w) = adj[current]
            .iter()
            .copied()
            .find(|&(v, w)| w + dist[v] == dist[current])
            .expect("finite distance implies an optimal successor");
        total_cost += w;
        let pa = layer.nodes[current].position;
        let pb = layer.nodes[v].position;
        total_length += ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt();
        nodes.push(v as u32);
        current = v;
    }
    Ok(PathResult {
        nodes,
        total_cost,
        total_length,
    })
}
