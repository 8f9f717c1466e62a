//! Phase 3c: terrain-aware shortest paths over the places layer.

use crate::core::Embedding;
use crate::fusion::SemanticGlobalMap;
use crate::places::PlacesLayer;
use crate::query::{retrieve_objects_3dsg, QueryConfig, QueryError};
use crate::regions::RegionHierarchy;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("place node {0} does not exist")]
    UnknownNode(u32),
    #[error("endpoint {node} lies on prohibited terrain {terrain}")]
    ProhibitedEndpoint { node: u32, terrain: u32 },
    #[error("goal unreachable from start: blocked by prohibited terrain")]
    UnreachableProhibited,
    #[error("goal unreachable from start: the places graph is disconnected")]
    UnreachableStructural,
    #[error("invalid terrain policy: {0}")]
    BadPolicy(String),
    #[error("retrieval returned no objects; no goal node to select")]
    NoGoal,
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Traversal preferences per terrain class. Unlisted terrains cost their
/// plain Euclidean length; prohibited terrains are removed from the graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerrainPolicy {
    /// Cost multiplier per terrain class id; must be ≥ 1 so the Euclidean
    /// A* heuristic stays admissible.
    #[serde(with = "u32_key_map")]
    pub multiplier: BTreeMap<u32, f64>,
    pub prohibited: BTreeSet<u32>,
    /// Permit start/goal on prohibited terrain (their incident edges are
    /// still traversable only toward non-prohibited nodes).
    pub allow_prohibited_endpoints: bool,
}

/// TOML (and JSON) table keys are strings; bridge them to `u32` terrain ids.
mod u32_key_map {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<u32, f64>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let by_name: BTreeMap<String, f64> =
            map.iter().map(|(k, &v)| (k.to_string(), v)).collect();
        by_name.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<u32, f64>, D::Error> {
        let by_name = BTreeMap::<String, f64>::deserialize(de)?;
        by_name
            .into_iter()
            .map(|(k, v)| {
                k.parse::<u32>()
                    .map(|k| (k, v))
                    .map_err(|_| serde::de::Error::custom(format!("bad terrain id key `{k}`")))
            })
            .collect()
    }
}

impl TerrainPolicy {
    pub fn validate(&self) -> Result<(), PlannerError> {
        for (&terrain, &m) in &self.multiplier {
            if !(m >= 1.0) {
                return Err(PlannerError::BadPolicy(format!(
                    "multiplier for terrain {terrain} is {m}; must be >= 1"
                )));
            }
        }
        Ok(())
    }

    fn factor(&self, terrain: u32) -> f64 {
        self.multiplier.get(&terrain).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    /// Node ids from start to goal.
    pub nodes: Vec<u32>,
    /// Multiplier-weighted cost, meters-equivalent.
    pub total_cost: f64,
    /// Plain Euclidean length, meters.
    pub total_length: f64,
}

/// Cost-optimal path under the policy. Edge cost is Euclidean length times
/// the larger of the two endpoint terrain multipliers; edges touching
/// prohibited nodes are removed. Among equal-cost optima the
/// lexicographically smallest node-id sequence is returned.
pub fn plan_path(
    layer: &PlacesLayer,
    start: u32,
    goal: u32,
    policy: &TerrainPolicy,
) -> Result<PathResult, PlannerError> {
    policy.validate()?;
    let start_node = layer.node(start).ok_or(PlannerError::UnknownNode(start))?;
    let goal_node = layer.node(goal).ok_or(PlannerError::UnknownNode(goal))?;
    if !policy.allow_prohibited_endpoints {
        for node in [start_node, goal_node] {
            if policy.prohibited.contains(&node.terrain) {
                return Err(PlannerError::ProhibitedEndpoint {
                    node: node.id,
                    terrain: node.terrain,
                });
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

    let adjacency = weighted_adjacency(layer, policy, start, goal);
    // exact optimal costs to the goal (Dijkstra in reverse; the graph is
    // undirected so this doubles as the lex-min reconstruction table)
    let dist_to_goal = dijkstra(&adjacency, goal as usize);
    if dist_to_goal[start as usize].is_infinite() {
        // distinguish policy-induced from structural disconnection by
        // re-checking on the unfiltered graph
        let open = TerrainPolicy::default();
        let unfiltered = weighted_adjacency(layer, &open, start, goal);
        return if dijkstra(&unfiltered, goal as usize)[start as usize].is_finite() {
            Err(PlannerError::UnreachableProhibited)
        } else {
            Err(PlannerError::UnreachableStructural)
        };
    }

    // A* forward pass confirms the optimum with the admissible Euclidean
    // heuristic (multipliers ≥ 1 keep it a lower bound)
    debug_assert!({
        let astar_cost = astar_cost(layer, &adjacency, start as usize, goal as usize);
        (astar_cost - dist_to_goal[start as usize]).abs() <= 1e-9 * (1.0 + astar_cost.abs())
    });

    // walk from start, always taking the smallest-id neighbor that stays on
    // an optimal path; dist values come from one Dijkstra pass, so the
    // equality test below is exact for at least the relaxation predecessor
    let mut nodes = vec![start];
    let mut total_cost = 0.0;
    let mut total_length = 0.0;
    let mut current = start as usize;
    while current != goal as usize {
        // adjacency lists are sorted by node id, so the first neighbor on an
        // optimal path is the lexicographic choice
        let (v, cost) = adjacency[current]
            .iter()
            .copied()
            .find(|&(v, cost)| cost + dist_to_goal[v] == dist_to_goal[current])
            .expect("finite dist implies an optimal successor");
        total_cost += cost;
        total_length += node_distance(layer, current, v);
        nodes.push(v as u32);
        current = v;
    }
    Ok(PathResult {
        nodes,
        total_cost,
        total_length,
    })
}

/// Filtered, multiplier-weighted adjacency indexed by node id. Edges touching
/// a prohibited node are dropped, except edges incident to an explicitly
/// allowed prohibited endpoint.
fn weighted_adjacency(
    layer: &PlacesLayer,
    policy: &TerrainPolicy,
    start: u32,
    goal: u32,
) -> Vec<Vec<(usize, f64)>> {
    let n = layer.nodes.len();
    let allowed = |id: u32| -> bool {
        let terrain = layer.nodes[id as usize].terrain;
        !policy.prohibited.contains(&terrain)
            || (policy.allow_prohibited_endpoints && (id == start || id == goal))
    };
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b, length) in &layer.edges {
        if !allowed(a) || !allowed(b) {
            continue;
        }
        let ta = layer.nodes[a as usize].terrain;
        let tb = layer.nodes[b as usize].terrain;
        let cost = length * policy.factor(ta).max(policy.factor(tb));
        adjacency[a as usize].push((b as usize, cost));
        adjacency[b as usize].push((a as usize, cost));
    }
    for list in &mut adjacency {
        list.sort_by(|x, y| x.0.cmp(&y.0));
    }
    adjacency
}

fn node_distance(layer: &PlacesLayer, a: usize, b: usize) -> f64 {
    let pa = layer.nodes[a].position;
    let pb = layer.nodes[b].position;
    ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt()
}

#[derive(PartialEq)]
struct HeapEntry {
    priority: f64,
    node: usize,
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .priority
            .partial_cmp(&self.priority)
            .unwrap()
            .then_with(|| other.node.cmp(&self.node))
    }
}

fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        priority: 0.0,
        node: source,
    });
    while let Some(HeapEntry { priority, node }) = heap.pop() {
        if priority > dist[node] {
            continue;
        }
        for &(v, w) in &adjacency[node] {
            let cand = priority + w;
            if cand < dist[v] {
                dist[v] = cand;
                heap.push(HeapEntry {
                    priority: cand,
                    node: v,
                });
            }
        }
    }
    dist
}

fn astar_cost(
    layer: &PlacesLayer,
    adjacency: &[Vec<(usize, f64)>],
    start: usize,
    goal: usize,
) -> f64 {
    let h = |n: usize| node_distance(layer, n, goal);
    let mut g = vec![f64::INFINITY; adjacency.len()];
    g[start] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        priority: h(start),
        node: start,
    });
    while let Some(HeapEntry { priority, node }) = heap.pop() {
        if node == goal {
            return g[goal];
        }
        if priority > g[node] + h(node) + 1e-12 {
            continue;
        }
        for &(v, w) in &adjacency[node] {
            let cand = g[node] + w;
            if cand < g[v] {
                g[v] = cand;
                heap.push(HeapEntry {
                    priority: cand + h(v),
                    node: v,
                });
            }
        }
    }
    f64::INFINITY
}

/// Pick the goal node for a task: run graph-filtered retrieval and return the
/// place linked to the highest-scored box.
pub fn select_goal_node(
    hierarchy: &RegionHierarchy,
    places: &PlacesLayer,
    map: &SemanticGlobalMap,
    query: &Embedding,
    cfg: &QueryConfig,
) -> Result<u32, PlannerError> {
    let result = retrieve_objects_3dsg(hierarchy, places, map, query, cfg)?;
    result
        .boxes
        .first()
        .and_then(|b| b.nearest_place_id)
        .ok_or(PlannerError::NoGoal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Embedding;
    use crate::places::PlaceNode;

    /// Layer with explicit (position, terrain) nodes and (a, b) edges;
    /// edge lengths are Euclidean.
    fn make_layer(nodes: &[((f64, f64), u32)], edges: &[(u32, u32)]) -> PlacesLayer {
        let nodes: Vec<PlaceNode> = nodes
            .iter()
            .enumerate()
            .map(|(i, &(position, terrain))| PlaceNode {
                id: i as u32,
                position,
                terrain,
                clearance: 1.0,
                terrain_embedding: Embedding::new(vec![1.0]),
                view_embedding: Embedding::new(vec![1.0]),
            })
            .collect();
        let edges = edges
            .iter()
            .map(|&(a, b)| {
                let pa = nodes[a as usize].position;
                let pb = nodes[b as usize].position;
                let len = ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt();
                (a, b, len)
            })
            .collect();
        PlacesLayer { nodes, edges }
    }

    #[test]
    fn start_equals_goal() {
        let layer = make_layer(&[((0.0, 0.0), 0)], &[]);
        let p = plan_path(&layer, 0, 0, &TerrainPolicy::default()).unwrap();
        assert_eq!(p.nodes, vec![0]);
        assert_eq!(p.total_cost, 0.0);
        assert_eq!(p.total_length, 0.0);
    }

    #[test]
    fn straight_line_cost_is_length() {
        let layer = make_layer(
            &[((0.0, 0.0), 0), ((3.0, 0.0), 0), ((3.0, 4.0), 0)],
            &[(0, 1), (1, 2)],
        );
        let p = plan_path(&layer, 0, 2, &TerrainPolicy::default()).unwrap();
        assert_eq!(p.nodes, vec![0, 1, 2]);
        assert_eq!(p.total_cost, 7.0);
        assert_eq!(p.total_length, 7.0);
    }

    #[test]
    fn multiplier_forces_detour_past_threshold() {
        // direct route over grass (terrain 1): length 10
        // detour over sidewalk (terrain 0): length 14
        let layer = make_layer(
            &[
                ((0.0, 0.0), 0),  // 0 start
                ((5.0, 0.0), 1),  // 1 grass midpoint
                ((10.0, 0.0), 0), // 2 goal
                ((3.0, 4.0), 0),  // 3 detour a (0->3 = 5)
                ((7.0, 4.0), 0),  // 4 detour b (3->4 = 4, 4->2 = 5)
            ],
            &[(0, 1), (1, 2), (0, 3), (3, 4), (4, 2)],
        );
        // detour ratio 14/10 = 1.4: multiplier below it keeps the grass route
        let mut policy = TerrainPolicy::default();
        policy.multiplier.insert(1, 1.3);
        let p = plan_path(&layer, 0, 2, &policy).unwrap();
        assert_eq!(p.nodes, vec![0, 1, 2]);
        assert_eq!(p.total_cost, 13.0);
        // multiplier above the ratio reroutes onto the sidewalk
        policy.multiplier.insert(1, 1.5);
        let p = plan_path(&layer, 0, 2, &policy).unwrap();
        assert_eq!(p.nodes, vec![0, 3, 4, 2]);
        assert_eq!(p.total_cost, 14.0);
        assert_eq!(p.total_length, 14.0);
    }

    #[test]
    fn prohibited_terrain_is_avoided_or_unreachable() {
        let layer = make_layer(
            &[((0.0, 0.0), 0), ((1.0, 0.0), 1), ((2.0, 0.0), 0)],
            &[(0, 1), (1, 2)],
        );
        let mut policy = TerrainPolicy::default();
        policy.prohibited.insert(1);
        assert!(matches!(
            plan_path(&layer, 0, 2, &policy),
            Err(PlannerError::UnreachableProhibited)
        ));
    }

    #[test]
    fn structural_disconnection_is_distinguished() {
        let layer = make_layer(&[((0.0, 0.0), 0), ((1.0, 0.0), 0)], &[]);
        assert!(matches!(
            plan_path(&layer, 0, 1, &TerrainPolicy::default()),
            Err(PlannerError::UnreachableStructural)
        ));
    }

    #[test]
    fn prohibited_endpoint_rejected_unless_allowed() {
        let layer = make_layer(
            &[((0.0, 0.0), 1), ((1.0, 0.0), 0), ((2.0, 0.0), 0)],
            &[(0, 1), (1, 2)],
        );
        let mut policy = TerrainPolicy::default();
        policy.prohibited.insert(1);
        assert!(matches!(
            plan_path(&layer, 0, 2, &policy),
            Err(PlannerError::ProhibitedEndpoint { node: 0, .. })
        ));
        policy.allow_prohibited_endpoints = true;
        let p = plan_path(&layer, 0, 2, &policy).unwrap();
        assert_eq!(p.nodes, vec![0, 1, 2]);
    }

    #[test]
    fn tie_breaks_to_lexicographically_smallest_path() {
        // two equal-cost routes 0->1->3 and 0->2->3; expect the one through 1
        let layer = make_layer(
            &[
                ((0.0, 0.0), 0),
                ((1.0, 1.0), 0),
                ((1.0, -1.0), 0),
                ((2.0, 0.0), 0),
            ],
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        );
        let p = plan_path(&layer, 0, 3, &TerrainPolicy::default()).unwrap();
        assert_eq!(p.nodes, vec![0, 1, 3]);
    }

    #[test]
    fn multiplier_below_one_rejected() {
        let layer = make_layer(&[((0.0, 0.0), 0)], &[]);
        let mut policy = TerrainPolicy::default();
        policy.multiplier.insert(0, 0.5);
        assert!(matches!(
            plan_path(&layer, 0, 0, &policy),
            Err(PlannerError::BadPolicy(_))
        ));
    }

    #[test]
    fn unknown_node_rejected() {
        let layer = make_layer(&[((0.0, 0.0), 0)], &[]);
        assert!(matches!(
            plan_path(&layer, 0, 7, &TerrainPolicy::default()),
            Err(PlannerError::UnknownNode(7))
        ));
    }
}
