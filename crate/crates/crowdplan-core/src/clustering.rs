//! Seeded k-medoids over an abstract item set and distance oracle.
//!
//! Items are addressed by dense indices `0..n`; the caller supplies a
//! symmetric distance closure. Medoids are always actual items (never
//! synthetic centroids) so the consensus stays a realizable opinion. All
//! tie-breaking is by lowest index, which together with the seeded
//! initialization makes every run a pure function of its inputs.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusteringError {
    #[error("cannot form {k} clusters from {n} items")]
    TooFewItems { n: usize, k: usize },
    #[error("cluster has no members")]
    EmptyCluster,
}

/// A partition of the items into `k` groups, each owning one medoid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSet {
    /// Item indices per cluster, each list ascending.
    pub clusters: Vec<Vec<usize>>,
    /// The medoid item of each cluster; always a member of it.
    pub medoids: Vec<usize>,
    /// Full assign/recompute sweeps executed.
    pub iterations_run: usize,
    /// True when the medoid set stopped changing before the iteration cap.
    pub converged: bool,
}

impl ClusterSet {
    pub fn total_cost<D: Fn(usize, usize) -> f64>(&self, distance: &D) -> f64 {
        self.clusters
            .iter()
            .zip(&self.medoids)
            .map(|(members, &m)| cluster_cost(m, members, distance))
            .sum()
    }
}

/// Sum of distances from `item` to every member of the cluster (the
/// self-term contributes zero).
pub fn cluster_cost<D: Fn(usize, usize) -> f64>(
    item: usize,
    members: &[usize],
    distance: &D,
) -> f64 {
    members.iter().map(|&m| distance(item, m)).sum()
}

/// The member minimizing [`cluster_cost`]; ties go to the lowest index.
///
/// Scans members in ascending order with two exact shortcuts: a candidate's
/// accumulation is abandoned once it exceeds the best sum seen, and a
/// zero-cost candidate ends the search outright (no later member can beat it
/// and ties resolve to the earlier index anyway).
pub fn cluster_medoid<D: Fn(usize, usize) -> f64>(
    members: &[usize],
    distance: &D,
) -> Result<usize, ClusteringError> {
    let (best, _) = cluster_medoid_with_cost(members, distance)?;
    Ok(best)
}

pub(crate) fn cluster_medoid_with_cost<D: Fn(usize, usize) -> f64>(
    members: &[usize],
    distance: &D,
) -> Result<(usize, f64), ClusteringError> {
    if members.is_empty() {
        return Err(ClusteringError::EmptyCluster);
    }
    let mut sorted: Vec<usize> = members.to_vec();
    sorted.sort_unstable();
    let mut best = sorted[0];
    let mut best_cost = f64::INFINITY;
    for &cand in &sorted {
        let mut sum = 0.0;
        for &m in &sorted {
            sum += distance(cand, m);
            if sum > best_cost {
                break;
            }
        }
        if sum < best_cost {
            best_cost = sum;
            best = cand;
        }
        if best_cost == 0.0 {
            break;
        }
    }
    Ok((best, best_cost))
}

/// Seeded k-medoids: sample `k` initial medoids uniformly without
/// replacement, then alternate nearest-medoid assignment (ties to the lowest
/// cluster index) with exact medoid recomputation until the medoids stop
/// changing or `max_iter` sweeps have run.
///
/// A cluster emptied by an assignment sweep is repaired by moving in the
/// globally farthest item from its current medoid.
pub fn k_medoids<D: Fn(usize, usize) -> f64>(
    n_items: usize,
    k: usize,
    distance: &D,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterSet, ClusteringError> {
    if n_items < k || k == 0 {
        return Err(ClusteringError::TooFewItems { n: n_items, k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n_items).collect();
    for i in 0..k {
        let j = rng.random_range(i..n_items);
        pool.swap(i, j);
    }
    let mut medoids: Vec<usize> = pool[..k].to_vec();

    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut iterations_run = 0;
    let mut converged = false;

    while iterations_run < max_iter {
        iterations_run += 1;

        for c in &mut clusters {
            c.clear();
        }
        for item in 0..n_items {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (ci, &m) in medoids.iter().enumerate() {
                let d = distance(item, m);
                if d < best_d {
                    best_d = d;
                    best = ci;
                }
            }
            clusters[best].push(item);
        }

        repair_empty_clusters(&mut clusters, &medoids, distance);

        let mut new_medoids = Vec::with_capacity(k);
        for members in &clusters {
            new_medoids.push(cluster_medoid(members, distance)?);
        }
        if new_medoids == medoids {
            converged = true;
            break;
        }
        medoids = new_medoids;
    }

    Ok(ClusterSet {
        clusters,
        medoids,
        iterations_run,
        converged,
    })
}

fn repair_empty_clusters<D: Fn(usize, usize) -> f64>(
    clusters: &mut [Vec<usize>],
    medoids: &[usize],
    distance: &D,
) {
    for empty_idx in 0..clusters.len() {
        if !clusters[empty_idx].is_empty() {
            continue;
        }
        // Farthest item from its own medoid, among clusters that can spare one.
        let mut pick: Option<(usize, usize, f64)> = None; // (cluster, position, dist)
        for (ci, members) in clusters.iter().enumerate() {
            if members.len() < 2 {
                continue;
            }
            for (pos, &item) in members.iter().enumerate() {
                let d = distance(item, medoids[ci]);
                let better = match pick {
                    None => true,
                    Some((bc, bp, bd)) => d > bd || (d == bd && item < clusters[bc][bp]),
                };
                if better {
                    pick = Some((ci, pos, d));
                }
            }
        }
        if let Some((ci, pos, _)) = pick {
            let item = clusters[ci].remove(pos);
            clusters[empty_idx].push(item);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Segment, clustering_distance};

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Segment {
        Segment::new(Point::new(x1, y1).unwrap(), Point::new(x2, y2).unwrap()).unwrap()
    }

    /// The three collinear segments used across the cost/medoid examples.
    fn collinear_trio() -> Vec<Segment> {
        vec![
            seg(0.0, 0.0, 1.0, 0.0),
            seg(3.0, 0.0, 4.0, 0.0),
            seg(6.0, 0.0, 7.0, 0.0),
        ]
    }

    #[test]
    fn cost_examples() {
        let items = collinear_trio();
        let d = |i: usize, j: usize| clustering_distance(&items[i], &items[j]);
        assert_eq!(cluster_cost(0, &[0], &d), 0.0);
        assert_eq!(cluster_cost(1, &[0, 1, 2], &d), 4.0);
        assert_eq!(cluster_cost(0, &[0, 1, 2], &d), 7.0);
    }

    #[test]
    fn medoid_examples() {
        let items = collinear_trio();
        let d = |i: usize, j: usize| clustering_distance(&items[i], &items[j]);
        assert_eq!(cluster_medoid(&[0, 1, 2], &d).unwrap(), 1);
        assert_eq!(cluster_medoid(&[0], &d).unwrap(), 0);
        assert_eq!(cluster_medoid(&[], &d), Err(ClusteringError::EmptyCluster));
    }

    #[test]
    fn medoid_tie_breaks_to_lowest_id() {
        // Two items at equal mutual distance: both have the same cost.
        let d = |_: usize, _: usize| 1.0;
        assert_eq!(cluster_medoid(&[3, 7], &d).unwrap(), 3);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let items = collinear_trio();
        let d = |i: usize, j: usize| clustering_distance(&items[i], &items[j]);
        let cs = k_medoids(3, 3, &d, 42, 100).unwrap();
        assert!(cs.converged);
        assert_eq!(cs.iterations_run, 1);
        let mut sizes: Vec<usize> = cs.clusters.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 1]);
        for (members, &m) in cs.clusters.iter().zip(&cs.medoids) {
            assert_eq!(members, &vec![m]);
        }
    }

    #[test]
    fn too_few_items_is_an_error() {
        let d = |_: usize, _: usize| 1.0;
        assert_eq!(
            k_medoids(2, 3, &d, 0, 10),
            Err(ClusteringError::TooFewItems { n: 2, k: 3 })
        );
    }

    #[test]
    fn well_separated_groups_recovered_for_every_seed() {
        // Two trios of collinear segments separated by a gap far larger than
        // the intra-group spacing.
        let mut items = Vec::new();
        for i in 0..3 {
            let x = 3.0 * i as f64;
            items.push(seg(x, 0.0, x + 1.0, 0.0));
        }
        for i in 0..3 {
            let x = 100.0 + 3.0 * i as f64;
            items.push(seg(x, 0.0, x + 1.0, 0.0));
        }
        let d = |i: usize, j: usize| clustering_distance(&items[i], &items[j]);
        for seed in 0..50 {
            let cs = k_medoids(6, 2, &d, seed, 100).unwrap();
            assert!(cs.converged, "seed {seed} did not converge");
            let mut groups: Vec<Vec<usize>> = cs.clusters.clone();
            groups.sort();
            assert_eq!(groups, vec![vec![0, 1, 2], vec![3, 4, 5]], "seed {seed}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let items = collinear_trio();
        let d = |i: usize, j: usize| clustering_distance(&items[i], &items[j]);
        let a = k_medoids(3, 2, &d, 7, 100).unwrap();
        let b = k_medoids(3, 2, &d, 7, 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn assignment_cost_non_increasing_and_invariants_hold() {
        // Deterministic pseudo-random points on a line; distances are |i - j|
        // scrambled by a fixed multiplier table.
        let coords: Vec<f64> = (0..12).map(|i| ((i * 37) % 17) as f64).collect();
        let d = |i: usize, j: usize| (coords[i] - coords[j]).abs();
        let cs = k_medoids(12, 3, &d, 11, 100).unwrap();
        assert!(cs.converged);
        // Partition.
        let mut all: Vec<usize> = cs.clusters.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..12).collect::<Vec<_>>());
        // Medoid membership and exact minimality.
        for (members, &m) in cs.clusters.iter().zip(&cs.medoids) {
            assert!(members.contains(&m));
            let best = cluster_medoid(members, &d).unwrap();
            assert_eq!(best, m);
        }
        // Nearest-medoid property at convergence.
        for (ci, members) in cs.clusters.iter().enumerate() {
            for &item in members {
                let own = d(item, cs.medoids[ci]);
                for (cj, &other) in cs.medoids.iter().enumerate() {
                    assert!(
                        own <= d(item, other),
                        "item {item} prefers cluster {cj} over {ci}"
                    );
                }
            }
        }
    }

    #[test]
    fn assignment_cost_non_increasing_without_repairs() {
        // With pairwise-distinct points no cluster can ever empty (a medoid
        // is always nearest to itself), so the classic alternation argument
        // applies. Determinism makes the run with a smaller iteration cap a
        // prefix of the longer run, which exposes the per-sweep costs.
        let coords: Vec<(f64, f64)> = (0..14)
            .map(|i| {
                let x = ((i * 83) % 101) as f64;
                let y = ((i * 47) % 97) as f64;
                (x, y)
            })
            .collect();
        let d = |i: usize, j: usize| {
            let dx = coords[i].0 - coords[j].0;
            let dy = coords[i].1 - coords[j].1;
            crate::math::sqrt(dx * dx + dy * dy)
        };
        for seed in 0..10 {
            let full = k_medoids(14, 3, &d, seed, 100).unwrap();
            let mut previous = f64::INFINITY;
            for cap in 1..=full.iterations_run {
                let cs = k_medoids(14, 3, &d, seed, cap).unwrap();
                let cost = cs.total_cost(&d);
                assert!(
                    cost <= previous + 1e-9,
                    "seed {seed}: cost rose from {previous} to {cost} at sweep {cap}"
                );
                previous = cost;
            }
        }
    }

    #[test]
    fn duplicate_items_stay_partitioned() {
        // All items identical: every distance is zero; empty-cluster repair
        // must still produce a full partition.
        let d = |_: usize, _: usize| 0.0;
        let cs = k_medoids(5, 3, &d, 3, 50).unwrap();
        let mut all: Vec<usize> = cs.clusters.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
        assert!(cs.clusters.iter().all(|c| !c.is_empty()));
        for (members, &m) in cs.clusters.iter().zip(&cs.medoids) {
            assert!(members.contains(&m));
        }
    }
}
