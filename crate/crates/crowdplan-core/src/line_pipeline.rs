//! End-to-end aggregation of line-segment opinions.
//!
//! [`aggregate_lines`] runs the fixed stage order
//! boundary → intersection → inter-separability → intra-separability →
//! clustering → post-processing. The first four convert the raw opinions
//! into valid ones (adjusting where possible, removing otherwise); the last
//! two group the survivors under the clustering distance and pick one
//! constraint-satisfying representative per group.
//!
//! Stages are deliberately order-dependent and run sequentially; the whole
//! pipeline is a pure function of (dataset, background, config).

use crate::clustering::{ClusterSet, cluster_medoid_with_cost, k_medoids};
use crate::geometry::{
    ConvexRegion, Segment, SegmentEnd, clustering_distance, extend_to_nearest, hausdorff_distance,
};
use crate::model::{
    BackgroundInfrastructure, Consensus, ConstraintConfig, ConstraintKind, LineOpinionBatch,
    OpinionGeometry, OpinionId, PipelineError, PipelineEvent, PipelineStage, Provenance,
    RelaxationPolicy, touches_background,
};
use alloc::vec;
use alloc::vec::Vec;

/// One line opinion flowing through the pipeline.
#[derive(Debug, Clone)]
pub struct LineItem {
    pub id: OpinionId,
    /// Index of the owning worker in the ingested batch list.
    pub worker: usize,
    /// Geometry as ingested.
    pub original: Segment,
    /// Geometry after any adjustment.
    pub current: Segment,
    pub alive: bool,
}

/// Mutable working state: items never move or re-index, they are only marked
/// dead, so opinion ids stay stable for the audit log.
#[derive(Debug, Clone)]
pub struct LineState {
    pub items: Vec<LineItem>,
    pub events: Vec<PipelineEvent>,
}

impl LineState {
    pub fn from_batches(batches: &[LineOpinionBatch]) -> Self {
        let mut items = Vec::new();
        for (worker, batch) in batches.iter().enumerate() {
            for (index, seg) in batch.opinions.iter().enumerate() {
                items.push(LineItem {
                    id: OpinionId::new(batch.annotator.clone(), index),
                    worker,
                    original: *seg,
                    current: *seg,
                    alive: true,
                });
            }
        }
        LineState {
            items,
            events: Vec::new(),
        }
    }

    pub fn survivor_count(&self) -> usize {
        self.items.iter().filter(|i| i.alive).count()
    }

    fn remove(&mut self, slot: usize, constraint: ConstraintKind) {
        self.items[slot].alive = false;
        self.events.push(PipelineEvent::Removed {
            id: self.items[slot].id.clone(),
            constraint,
        });
    }
}

/// Drops every opinion that does not lie inside the region.
pub fn constraint_boundary(state: &mut LineState, region: &ConvexRegion, epsilon: f64) {
    for slot in 0..state.items.len() {
        if !state.items[slot].alive {
            continue;
        }
        if !region.contains_segment(&state.items[slot].current, epsilon) {
            state.remove(slot, ConstraintKind::Boundary);
        }
    }
}

/// Connects disconnected opinions to the background: a segment already
/// touching a background line is left alone; otherwise both endpoint
/// extensions are computed, extensions leaving the region are discarded, and
/// the shorter surviving one replaces the segment. With no surviving
/// extension the opinion is removed.
pub fn constraint_intersection(
    state: &mut LineState,
    background: &[Segment],
    region: &ConvexRegion,
    epsilon: f64,
) {
    for slot in 0..state.items.len() {
        if !state.items[slot].alive {
            continue;
        }
        let current = state.items[slot].current;
        if touches_background(&current, background, epsilon) {
            continue;
        }
        let keep_inside = |s: &Segment| region.contains_segment(s, epsilon);
        let via_a =
            extend_to_nearest(&current, SegmentEnd::A, background, epsilon).filter(keep_inside);
        let via_b =
            extend_to_nearest(&current, SegmentEnd::B, background, epsilon).filter(keep_inside);
        let replacement = match (via_a, via_b) {
            // Ties go to the second-endpoint extension.
            (Some(a), Some(b)) => Some(if a.length() < b.length() { a } else { b }),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        };
        match replacement {
            Some(adjusted) => {
                state.events.push(PipelineEvent::Adjusted {
                    id: state.items[slot].id.clone(),
                    from: current,
                    to: adjusted,
                });
                state.items[slot].current = adjusted;
            }
            None => state.remove(slot, ConstraintKind::Intersection),
        }
    }
}

/// Drops opinions that sit too close to (i.e. duplicate) a background line.
pub fn constraint_inter_separability(state: &mut LineState, background: &[Segment], d1: f64) {
    for slot in 0..state.items.len() {
        if !state.items[slot].alive {
            continue;
        }
        let too_close = background
            .iter()
            .any(|b| hausdorff_distance(&state.items[slot].current, b) < d1);
        if too_close {
            state.remove(slot, ConstraintKind::InterSeparability);
        }
    }
}

/// Resolves too-close same-worker pairs, one removal at a time, giving the
/// post-processing constraints priority:
/// (a) if exactly one of the pair exceeds the length cap, that one goes;
/// (b) otherwise the more congested one goes, where congestion counts the
///     other surviving proposals (any worker, the pair itself excluded)
///     within `d2`;
/// (c) otherwise the second one goes.
///
/// Pairs are scanned in ascending index order and re-evaluated after every
/// removal.
pub fn constraint_intra_separability(state: &mut LineState, d1: f64, d2: f64, max_length: f64) {
    let worker_count = state.items.iter().map(|i| i.worker + 1).max().unwrap_or(0);
    let mut worker_slots: Vec<Vec<usize>> = vec![Vec::new(); worker_count];
    for (slot, item) in state.items.iter().enumerate() {
        if item.alive {
            worker_slots[item.worker].push(slot);
        }
    }
    for slots in &worker_slots {
        loop {
            let violating_pair = slots
                .iter()
                .enumerate()
                .filter(|&(_, &s1)| state.items[s1].alive)
                .find_map(|(i, &s1)| {
                    slots[i + 1..]
                        .iter()
                        .filter(|&&s2| state.items[s2].alive)
                        .find(|&&s2| {
                            hausdorff_distance(&state.items[s1].current, &state.items[s2].current)
                                < d1
                        })
                        .map(|&s2| (s1, s2))
                });
            let Some((first, second)) = violating_pair else {
                break;
            };
            let long_first = state.items[first].current.length() > max_length;
            let long_second = state.items[second].current.length() > max_length;
            let doomed = if long_first != long_second {
                if long_first { first } else { second }
            } else {
                let n1 = congestion_count(state, first, second, d2);
                let n2 = congestion_count(state, second, first, d2);
                if n1 > n2 { first } else { second }
            };
            state.remove(doomed, ConstraintKind::IntraSeparability);
        }
    }
}

/// Surviving proposals (other than the pair under scrutiny) within `d2` of
/// the item in `slot`.
fn congestion_count(state: &LineState, slot: usize, partner: usize, d2: f64) -> usize {
    let target = &state.items[slot].current;
    state
        .items
        .iter()
        .enumerate()
        .filter(|(other, it)| {
            *other != slot
                && *other != partner
                && it.alive
                && hausdorff_distance(&it.current, target) < d2
        })
        .count()
}

/// Outcome of the greedy constrained selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedConsensus {
    /// (cluster index, survivor index within the clustering id space), in
    /// processing order.
    pub picks: Vec<(usize, usize)>,
    /// Cluster size per pick, parallel to `picks`.
    pub cluster_sizes: Vec<usize>,
    pub effective_d2: f64,
    pub relaxations: usize,
}

/// Picks one representative per cluster, processing clusters in descending
/// size (ties: smaller medoid cost, then lower index). Within a cluster,
/// candidates are the members within the length cap in ascending cost order
/// (ties by id); the first whose spacing to the background and the already
/// chosen representatives clears the effective threshold wins.
///
/// Under [`RelaxationPolicy::GeometricDecay`] an unservable cluster shrinks
/// the threshold and restarts the whole selection; under
/// [`RelaxationPolicy::Strict`] it is an error naming the cluster.
pub fn post_processing_optimisation(
    segments: &[Segment],
    clusters: &ClusterSet,
    background: &[Segment],
    config: &ConstraintConfig,
) -> Result<SelectedConsensus, PipelineError> {
    let distance = |i: usize, j: usize| clustering_distance(&segments[i], &segments[j]);

    let mut order: Vec<usize> = (0..clusters.clusters.len()).collect();
    let medoid_costs: Vec<f64> = clusters
        .clusters
        .iter()
        .map(|members| {
            cluster_medoid_with_cost(members, &distance)
                .map(|(_, cost)| cost)
                .unwrap_or(0.0)
        })
        .collect();
    order.sort_by(|&a, &b| {
        clusters.clusters[b]
            .len()
            .cmp(&clusters.clusters[a].len())
            .then(medoid_costs[a].total_cmp(&medoid_costs[b]))
            .then(a.cmp(&b))
    });

    // Candidate pools: members within the length cap, ascending id. Costs are
    // computed lazily and cached across relaxation rounds.
    let mut pools: Vec<CandidatePool> = order
        .iter()
        .map(|&ci| CandidatePool::new(&clusters.clusters[ci], segments, config.max_length))
        .collect();

    let mut effective_d2 = config.d2;
    let mut relaxations = 0;
    loop {
        match try_select(&mut pools, segments, background, effective_d2, &distance) {
            Ok(picks) => {
                let cluster_sizes = order
                    .iter()
                    .map(|&ci| clusters.clusters[ci].len())
                    .collect();
                return Ok(SelectedConsensus {
                    picks: order.iter().copied().zip(picks).collect(),
                    cluster_sizes,
                    effective_d2,
                    relaxations,
                });
            }
            Err(pool_idx) => {
                let cluster = order[pool_idx];
                if config.relaxation == RelaxationPolicy::Strict
                    || relaxations >= config.max_relaxations
                {
                    return Err(PipelineError::InfeasibleSelection {
                        cluster,
                        effective_d2,
                        relaxations,
                    });
                }
                effective_d2 *= config.decay_factor;
                relaxations += 1;
            }
        }
    }
}

/// One pass over all clusters at a fixed threshold. Returns the chosen
/// survivor index per pool, or the index of the first pool with no feasible
/// candidate.
fn try_select<D: Fn(usize, usize) -> f64>(
    pools: &mut [CandidatePool],
    segments: &[Segment],
    background: &[Segment],
    effective_d2: f64,
    distance: &D,
) -> Result<Vec<usize>, usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(pools.len());
    for (pool_idx, pool) in pools.iter_mut().enumerate() {
        let mut found = None;
        pool.reset();
        while let Some(candidate) = pool.next_cheapest(distance) {
            let seg = &segments[candidate];
            let clear_background = background
                .iter()
                .all(|b| hausdorff_distance(seg, b) >= effective_d2);
            let clear_chosen = chosen
                .iter()
                .all(|&c| hausdorff_distance(seg, &segments[c]) >= effective_d2);
            if clear_background && clear_chosen {
                found = Some(candidate);
                break;
            }
        }
        match found {
            Some(c) => chosen.push(c),
            None => return Err(pool_idx),
        }
    }
    Ok(chosen)
}

/// Lazily yields cluster members in ascending cost order (ties by id).
///
/// Costs are computed on demand with the same exact shortcuts as the medoid
/// scan: a candidate whose partial sum already exceeds the best completed
/// cost is abandoned for this extraction, and a zero-cost candidate wins its
/// extraction immediately (ties resolve to the lowest id, which is the scan
/// order). Completed sums are cached for later extractions and relaxation
/// rounds.
struct CandidatePool {
    members: Vec<usize>,
    eligible: Vec<usize>,
    cost_cache: Vec<Option<f64>>,
    emitted: Vec<bool>,
}

impl CandidatePool {
    fn new(members: &[usize], segments: &[Segment], max_length: f64) -> Self {
        let mut members = members.to_vec();
        members.sort_unstable();
        let eligible = members
            .iter()
            .enumerate()
            .filter(|&(_, &m)| segments[m].length() <= max_length)
            .map(|(pos, _)| pos)
            .collect();
        let n = members.len();
        CandidatePool {
            members,
            eligible,
            cost_cache: vec![None; n],
            emitted: vec![false; n],
        }
    }

    fn reset(&mut self) {
        self.emitted.iter_mut().for_each(|e| *e = false);
    }

    fn next_cheapest<D: Fn(usize, usize) -> f64>(&mut self, distance: &D) -> Option<usize> {
        let mut best_pos: Option<usize> = None;
        let mut best_cost = f64::INFINITY;
        for &pos in &self.eligible {
            if self.emitted[pos] {
                continue;
            }
            let cost = match self.cost_cache[pos] {
                Some(c) => c,
                None => {
                    let cand = self.members[pos];
                    let mut sum = 0.0;
                    let mut aborted = false;
                    for &m in &self.members {
                        sum += distance(cand, m);
                        if sum > best_cost {
                            aborted = true;
                            break;
                        }
                    }
                    if aborted {
                        continue;
                    }
                    self.cost_cache[pos] = Some(sum);
                    sum
                }
            };
            if cost < best_cost || best_pos.is_none() {
                best_cost = cost;
                best_pos = Some(pos);
                if cost == 0.0 {
                    break;
                }
            }
        }
        let pos = best_pos?;
        self.emitted[pos] = true;
        Some(self.members[pos])
    }
}

/// Runs the whole line pipeline and assembles the consensus.
pub fn aggregate_lines(
    batches: &[LineOpinionBatch],
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> Result<Consensus, PipelineError> {
    config.validate()?;

    let mut state = LineState::from_batches(batches);
    let mut counts: Vec<(PipelineStage, usize)> =
        vec![(PipelineStage::Ingestion, state.survivor_count())];

    constraint_boundary(&mut state, &background.region, config.epsilon);
    counts.push((PipelineStage::Boundary, state.survivor_count()));

    constraint_intersection(
        &mut state,
        &background.segments,
        &background.region,
        config.epsilon,
    );
    counts.push((PipelineStage::Intersection, state.survivor_count()));

    constraint_inter_separability(&mut state, &background.segments, config.d1);
    counts.push((PipelineStage::InterSeparability, state.survivor_count()));

    constraint_intra_separability(&mut state, config.d1, config.d2, config.max_length);
    counts.push((PipelineStage::IntraSeparability, state.survivor_count()));

    let survivors: Vec<usize> = state
        .items
        .iter()
        .enumerate()
        .filter(|(_, it)| it.alive)
        .map(|(slot, _)| slot)
        .collect();

    if survivors.len() < config.k_star {
        let stage = counts
            .iter()
            .find(|(_, n)| *n < config.k_star)
            .map(|(stage, _)| *stage)
            .unwrap_or(PipelineStage::IntraSeparability);
        return Err(PipelineError::InsufficientSurvivors {
            stage,
            survivors: survivors.len(),
            needed: config.k_star,
        });
    }

    let survivor_segments: Vec<Segment> = survivors
        .iter()
        .map(|&slot| state.items[slot].current)
        .collect();
    let distance =
        |i: usize, j: usize| clustering_distance(&survivor_segments[i], &survivor_segments[j]);
    let clusters = k_medoids(
        survivor_segments.len(),
        config.k_star,
        &distance,
        config.seed,
        config.max_iter,
    )?;

    let selection =
        post_processing_optimisation(&survivor_segments, &clusters, &background.segments, config)?;

    let mut representatives = Vec::with_capacity(selection.picks.len());
    let mut provenance = Vec::with_capacity(selection.picks.len());
    for &(_, survivor_idx) in &selection.picks {
        let item = &state.items[survivors[survivor_idx]];
        representatives.push(OpinionGeometry::Line(item.current));
        provenance.push(Provenance {
            id: item.id.clone(),
            original: OpinionGeometry::Line(item.original),
        });
    }

    Ok(Consensus {
        representatives,
        cluster_sizes: selection.cluster_sizes,
        effective_d2: selection.effective_d2,
        provenance,
        events: state.events,
        survivors: survivors.len(),
    })
}
