//! Batch agglomerative information bottleneck baseline.

use super::RegionError;
use crate::core::{cosine_similarity, Embedding};
use crate::places::PlacesLayer;

/// Task-driven flat clustering of place nodes. Each place gets a task
/// distribution `p(task | place)` from a softmax over cosine similarities to
/// the task embeddings; clusters are then merged greedily, always picking the
/// pair whose merge loses the least task information, until `n_clusters`
/// remain. The information loss of merging clusters `i`, `j` is
/// `(p_i + p_j) * JS(P_i, P_j)` with the Jensen-Shannon divergence weighted
/// by the clusters' relative masses. Returns the partition as lists of place
/// ids, ordered by smallest member.
pub fn aib_regions_baseline(
    places: &PlacesLayer,
    task_embeddings: &[Embedding],
    n_clusters: usize,
) -> Result<Vec<Vec<u32>>, RegionError> {
    let n = places.nodes.len();
    if n == 0 {
        return Err(RegionError::NoPlaces);
    }
    if task_embeddings.is_empty() {
        return Err(RegionError::NoTasks);
    }
    if n_clusters == 0 || n_clusters > n {
        return Err(RegionError::TooManyClusters {
            requested: n_clusters,
            available: n,
        });
    }

    let t = task_embeddings.len();
    // per-place softmax task distribution
    let mut clusters: Vec<Option<Cluster>> = Vec::with_capacity(n);
    for node in &places.nodes {
        if node.view_embedding.dim() == 0 {
            return Err(RegionError::MissingEmbedding(node.id));
        }
        let sims: Vec<f64> = task_embeddings
            .iter()
            .map(|e| cosine_similarity(&node.view_embedding, e))
            .collect::<Result<_, _>>()?;
        let max = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = sims.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        clusters.push(Some(Cluster {
            members: vec![node.id],
            mass: 1.0 / n as f64,
            dist: exps.iter().map(|e| e / z).collect(),
        }));
    }

    let mut active = n;
    while active > n_clusters {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            let Some(ci) = clusters[i].as_ref() else { continue };
            for j in (i + 1)..n {
                let Some(cj) = clusters[j].as_ref() else { continue };
                let delta = merge_cost(ci, cj, t);
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        delta < bd - 1e-15
                            || ((delta - bd).abs() <= 1e-15
                                && (ci.members[0], cj.members[0])
                                    < (
                                        clusters[bi].as_ref().unwrap().members[0],
                                        clusters[bj].as_ref().unwrap().members[0],
                                    ))
                    }
                };
                if better {
                    best = Some((delta, i, j));
                }
            }
        }
        let (_, i, j) = best.unwrap();
        let cj = clusters[j].take().unwrap();
        let ci = clusters[i].as_mut().unwrap();
        let total = ci.mass + cj.mass;
        for k in 0..t {
            ci.dist[k] = (ci.mass * ci.dist[k] + cj.mass * cj.dist[k]) / total;
        }
        ci.mass = total;
        ci.members.extend(cj.members);
        ci.members.sort_unstable();
        active -= 1;
    }

    let mut out: Vec<Vec<u32>> = clusters.into_iter().flatten().map(|c| c.members).collect();
    out.sort_by(|a, b| a[0].cmp(&b[0]));
    Ok(out)
}

struct Cluster {
    members: Vec<u32>,
    mass: f64,
    dist: Vec<f64>,
}

/// Information loss of merging two clusters: the mass-weighted
/// Jensen-Shannon divergence between their task distributions.
fn merge_cost(a: &Cluster, b: &Cluster, t: usize) -> f64 {
    let total = a.mass + b.mass;
    let pi_a = a.mass / total;
    let pi_b = b.mass / total;
    let mut js = 0.0;
    for k in 0..t {
        let m = pi_a * a.dist[k] + pi_b * b.dist[k];
        if a.dist[k] > 0.0 && m > 0.0 {
            js += pi_a * a.dist[k] * (a.dist[k] / m).ln();
        }
        if b.dist[k] > 0.0 && m > 0.0 {
            js += pi_b * b.dist[k] * (b.dist[k] / m).ln();
        }
    }
    total * js.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::testutil::layer;

    #[test]
    fn rejects_bad_arguments() {
        let l = layer(&[((0.0, 0.0), vec![1.0]), ((1.0, 0.0), vec![1.0])]);
        let tasks = vec![Embedding::new(vec![1.0])];
        assert!(matches!(
            aib_regions_baseline(&l, &[], 1),
            Err(RegionError::NoTasks)
        ));
        assert!(matches!(
            aib_regions_baseline(&l, &tasks, 3),
            Err(RegionError::TooManyClusters { .. })
        ));
        assert!(aib_regions_baseline(&l, &tasks, 0).is_err());
        assert!(aib_regions_baseline(&layer(&[]), &tasks, 1).is_err());
    }

    #[test]
    fn n_clusters_equals_n_returns_singletons() {
        let l = layer(&[((0.0, 0.0), vec![1.0, 0.0]), ((5.0, 0.0), vec![0.0, 1.0])]);
        let tasks = vec![Embedding::new(vec![1.0, 0.0]), Embedding::new(vec![0.0, 1.0])];
        let partition = aib_regions_baseline(&l, &tasks, 2).unwrap();
        assert_eq!(partition, vec![vec![0], vec![1]]);
    }

    #[test]
    fn task_aligned_groups_merge_together() {
        // places 0,1 point at task A, places 2,3 at task B; asking for two
        // clusters must group by task affinity
        let a = vec![1.0, 0.0];
        let b = vec![0.0, 1.0];
        let l = layer(&[
            ((0.0, 0.0), a.clone()),
            ((100.0, 0.0), a.clone()),
            ((0.0, 100.0), b.clone()),
            ((100.0, 100.0), b.clone()),
        ]);
        let tasks = vec![Embedding::new(a), Embedding::new(b)];
        let partition = aib_regions_baseline(&l, &tasks, 2).unwrap();
        assert_eq!(partition, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn one_cluster_collects_everything() {
        let l = layer(&[
            ((0.0, 0.0), vec![1.0, 0.3]),
            ((1.0, 0.0), vec![0.3, 1.0]),
            ((2.0, 0.0), vec![1.0, 1.0]),
        ]);
        let tasks = vec![Embedding::new(vec![1.0, 0.0])];
        let partition = aib_regions_baseline(&l, &tasks, 1).unwrap();
        assert_eq!(partition, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn identical_distributions_merge_at_zero_cost() {
        let e = vec![0.5, 0.5];
        let l = layer(&[((0.0, 0.0), e.clone()), ((400.0, 0.0), e.clone()), ((800.0, 0.0), e)]);
        let tasks = vec![Embedding::new(vec![1.0, 0.0]), Embedding::new(vec![0.0, 1.0])];
        // identical task distributions: JS divergence is 0 for every pair,
        // ties resolve to the lexicographically smallest pair first
        let partition = aib_regions_baseline(&l, &tasks, 2).unwrap();
        assert_eq!(partition, vec![vec![0, 1], vec![2]]);
    }
}
