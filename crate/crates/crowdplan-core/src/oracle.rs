//! Independent brute-force and sampling verifiers used by the test suite to
//! certify the optimized implementations.
//!
//! Nothing here shares an algorithmic shortcut with the main path: the
//! Hausdorff oracle samples points and minimizes by ternary search instead of
//! trusting the endpoint closed form or the projection formula, the
//! clustering oracle enumerates every partition, and [`verify_consensus`]
//! re-derives every pipeline postcondition from the raw dataset and the
//! consensus audit log. These routines trade speed for obviousness and may be
//! exponentially slower than the paths they check.

use crate::geometry::{Point, Segment, hausdorff_distance, point_distance};
use crate::model::{
    BackgroundInfrastructure, Batches, Consensus, ConstraintConfig, ConstraintKind,
    LineOpinionBatch, OpinionGeometry, OpinionId, PipelineEvent, PointOpinionBatch,
};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("brute force is bounded to 10 items and 3 groups, got {n} items, {k} groups")]
    BoundsExceeded { n: usize, k: usize },
    #[error("cannot partition {n} items into {k} non-empty groups")]
    TooFewItems { n: usize, k: usize },
}

/// Distance from a point to a segment found by ternary search over the
/// segment parameter (the distance is convex along the segment), not by the
/// projection formula the production code uses.
fn ternary_point_segment_distance(p: &Point, s: &Segment) -> f64 {
    let a = s.a();
    let b = s.b();
    let at = |t: f64| {
        let x = a.x + t * (b.x - a.x);
        let y = a.y + t * (b.y - a.y);
        let dx = p.x - x;
        let dy = p.y - y;
        // sqrt is monotone: minimizing the square minimizes the distance.
        dx * dx + dy * dy
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if at(m1) <= at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    crate::math::sqrt(at((lo + hi) / 2.0))
}

/// Sampling estimate of the symmetric Hausdorff distance: the larger, over
/// both directions, of the maximum over `samples_per_segment` uniformly
/// spaced points (endpoints included) of the ternary-search distance to the
/// other segment.
///
/// Never materially exceeds the true value and converges to it from below as
/// the sample count grows.
pub fn sampled_hausdorff(s: &Segment, t: &Segment, samples_per_segment: usize) -> f64 {
    assert!(samples_per_segment >= 2, "need at least the two endpoints");
    let directed = |from: &Segment, to: &Segment| {
        let a = from.a();
        let b = from.b();
        let mut worst = 0.0f64;
        for i in 0..samples_per_segment {
            let t_par = i as f64 / (samples_per_segment - 1) as f64;
            let p = Point {
                x: a.x + t_par * (b.x - a.x),
                y: a.y + t_par * (b.y - a.y),
            };
            worst = worst.max(ternary_point_segment_distance(&p, to));
        }
        worst
    };
    directed(s, t).max(directed(t, s))
}

/// Result of exhaustive partition search.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceClustering {
    pub optimal_cost: f64,
    /// The cheapest partition, lexicographically first on ties, each group
    /// ascending and groups ordered by first member.
    pub optimal_partition: Vec<Vec<usize>>,
}

/// Enumerates every partition of `n` items into exactly `k` non-empty groups
/// (restricted growth strings), scores each group by its best medoid, and
/// returns the cheapest assignment.
pub fn brute_force_clustering<D: Fn(usize, usize) -> f64>(
    n: usize,
    k: usize,
    distance: &D,
) -> Result<BruteForceClustering, OracleError> {
    if n > 10 || k > 3 {
        return Err(OracleError::BoundsExceeded { n, k });
    }
    if k == 0 || n < k {
        return Err(OracleError::TooFewItems { n, k });
    }

    let mut best_cost = f64::INFINITY;
    let mut best_labels: Vec<usize> = Vec::new();

    // Restricted growth strings in lexicographic order: label[0] = 0 and
    // label[i] <= min(max(label[..i]) + 1, k - 1).
    let mut labels = vec![0usize; n];
    loop {
        let used = labels.iter().copied().max().unwrap() + 1;
        if used == k {
            let cost = partition_cost(&labels, k, distance);
            if cost < best_cost {
                best_cost = cost;
                best_labels = labels.clone();
            }
        }
        let mut advanced = false;
        for i in (1..n).rev() {
            let max_prev = labels[..i].iter().copied().max().unwrap();
            let limit = (max_prev + 1).min(k - 1);
            if labels[i] < limit {
                labels[i] += 1;
                labels[i + 1..].iter_mut().for_each(|l| *l = 0);
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (item, &label) in best_labels.iter().enumerate() {
        groups[label].push(item);
    }
    Ok(BruteForceClustering {
        optimal_cost: best_cost,
        optimal_partition: groups,
    })
}

fn partition_cost<D: Fn(usize, usize) -> f64>(labels: &[usize], k: usize, distance: &D) -> f64 {
    let mut total = 0.0;
    for group in 0..k {
        let members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == group)
            .map(|(i, _)| i)
            .collect();
        let mut best = f64::INFINITY;
        for &m in &members {
            let cost: f64 = members.iter().map(|&o| distance(m, o)).sum();
            if cost < best {
                best = cost;
            }
        }
        total += best;
    }
    total
}

/// Re-checks every externally visible postcondition of a pipeline run from
/// scratch, using only the geometry primitives, the raw dataset and the
/// consensus audit log. Returns one message per violated assertion; an empty
/// list certifies the run.
pub fn verify_consensus(
    consensus: &Consensus,
    batches: &Batches,
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> Vec<String> {
    match batches {
        Batches::Lines(lines) => verify_line_consensus(consensus, lines, background, config),
        Batches::Points(points) => verify_point_consensus(consensus, points, background, config),
    }
}

fn event_maps(
    events: &[PipelineEvent],
) -> (
    BTreeMap<OpinionId, ConstraintKind>,
    BTreeMap<OpinionId, Segment>,
) {
    let mut removed = BTreeMap::new();
    let mut adjusted = BTreeMap::new();
    for e in events {
        match e {
            PipelineEvent::Removed { id, constraint } => {
                removed.insert(id.clone(), *constraint);
            }
            PipelineEvent::Adjusted { id, to, .. } => {
                adjusted.insert(id.clone(), *to);
            }
        }
    }
    (removed, adjusted)
}

fn verify_line_consensus(
    consensus: &Consensus,
    batches: &[LineOpinionBatch],
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> Vec<String> {
    let mut faults = Vec::new();
    let (removed, adjusted) = event_maps(&consensus.events);

    // Reconstruct the surviving set: ingested minus removed, adjustments
    // applied.
    let mut survivors: Vec<(OpinionId, usize, Segment)> = Vec::new(); // (id, worker, final)
    let mut ingested = 0usize;
    for (worker, batch) in batches.iter().enumerate() {
        for (index, seg) in batch.opinions.iter().enumerate() {
            ingested += 1;
            let id = OpinionId::new(batch.annotator.clone(), index);
            if removed.contains_key(&id) {
                continue;
            }
            let final_seg = adjusted.get(&id).copied().unwrap_or(*seg);
            survivors.push((id, worker, final_seg));
        }
    }

    // Log reconciliation: ingested = surviving + removed.
    if survivors.len() + removed.len() != ingested {
        faults.push(format!(
            "log mismatch: {} survivors + {} removed != {} ingested",
            survivors.len(),
            removed.len(),
            ingested
        ));
    }
    if survivors.len() != consensus.survivors {
        faults.push(format!(
            "survivor count: consensus reports {}, reconstruction finds {}",
            consensus.survivors,
            survivors.len()
        ));
    }
    let size_sum: usize = consensus.cluster_sizes.iter().sum();
    if size_sum != survivors.len() {
        faults.push(format!(
            "cluster sizes sum to {size_sum}, expected {} survivors",
            survivors.len()
        ));
    }

    // Pre-processing guarantees on every survivor.
    for (id, _, seg) in &survivors {
        if !background.region.contains_segment(seg, config.epsilon) {
            faults.push(format!("survivor {id}: outside the region"));
        }
        if !crate::model::touches_background(seg, &background.segments, config.epsilon) {
            faults.push(format!("survivor {id}: no endpoint on a background line"));
        }
        for b in &background.segments {
            if hausdorff_distance(seg, b) < config.d1 {
                faults.push(format!(
                    "survivor {id}: closer than d1 to a background line"
                ));
                break;
            }
        }
    }
    for i in 0..survivors.len() {
        for j in i + 1..survivors.len() {
            let (id_i, w_i, s_i) = &survivors[i];
            let (id_j, w_j, s_j) = &survivors[j];
            if w_i == w_j && hausdorff_distance(s_i, s_j) < config.d1 {
                faults.push(format!(
                    "survivors {id_i} and {id_j}: same worker closer than d1"
                ));
            }
        }
    }

    // Effective threshold within the configured bound.
    if consensus.effective_d2 > config.d2 {
        faults.push(format!(
            "effective_d2 {} exceeds configured {}",
            consensus.effective_d2, config.d2
        ));
    }

    // Representative constraints.
    if consensus.representatives.len() != config.k_star {
        faults.push(format!(
            "expected {} representatives, got {}",
            config.k_star,
            consensus.representatives.len()
        ));
    }
    let mut rep_segments: Vec<(usize, Segment)> = Vec::new();
    for (idx, (rep, prov)) in consensus
        .representatives
        .iter()
        .zip(&consensus.provenance)
        .enumerate()
    {
        let OpinionGeometry::Line(seg) = rep else {
            faults.push(format!("representative {idx}: not a line"));
            continue;
        };
        rep_segments.push((idx, *seg));
        if seg.length() > config.max_length {
            faults.push(format!(
                "representative {idx} ({}): length {} exceeds max {}",
                prov.id,
                seg.length(),
                config.max_length
            ));
        }
        match survivors.iter().find(|(id, _, _)| *id == prov.id) {
            None => faults.push(format!(
                "representative {idx}: provenance {} is not a survivor",
                prov.id
            )),
            Some((_, _, survivor_seg)) => {
                if survivor_seg != seg {
                    faults.push(format!(
                        "representative {idx}: geometry differs from survivor {}",
                        prov.id
                    ));
                }
            }
        }
        for b in &background.segments {
            if hausdorff_distance(seg, b) < consensus.effective_d2 {
                faults.push(format!(
                    "representative {idx} ({}): congestion with a background line under effective_d2",
                    prov.id
                ));
                break;
            }
        }
    }
    for i in 0..rep_segments.len() {
        for j in i + 1..rep_segments.len() {
            let (idx_i, s_i) = &rep_segments[i];
            let (idx_j, s_j) = &rep_segments[j];
            if hausdorff_distance(s_i, s_j) < consensus.effective_d2 {
                faults.push(format!(
                    "representatives {idx_i} and {idx_j}: congestion under effective_d2"
                ));
            }
        }
    }

    faults
}

fn verify_point_consensus(
    consensus: &Consensus,
    batches: &[PointOpinionBatch],
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> Vec<String> {
    let mut faults = Vec::new();
    let (removed, _) = event_maps(&consensus.events);

    let mut survivors: Vec<(OpinionId, usize, String, Point)> = Vec::new();
    let mut ingested = 0usize;
    for (worker, batch) in batches.iter().enumerate() {
        for (index, op) in batch.opinions.iter().enumerate() {
            ingested += 1;
            let id = OpinionId::new(batch.annotator.clone(), index);
            if removed.contains_key(&id) {
                continue;
            }
            survivors.push((id, worker, op.tag.clone(), op.point));
        }
    }

    if survivors.len() + removed.len() != ingested {
        faults.push(format!(
            "log mismatch: {} survivors + {} removed != {} ingested",
            survivors.len(),
            removed.len(),
            ingested
        ));
    }
    if survivors.len() != consensus.survivors {
        faults.push(format!(
            "survivor count: consensus reports {}, reconstruction finds {}",
            consensus.survivors,
            survivors.len()
        ));
    }

    for (id, _, tag, p) in &survivors {
        if !background.region.contains_point(p, config.epsilon) {
            faults.push(format!("survivor {id}: outside the region"));
        }
        for f in &background.points {
            if !f.exempt && &f.tag == tag && point_distance(&f.point, p) < config.d1 {
                faults.push(format!(
                    "survivor {id}: closer than d1 to an existing {tag} facility"
                ));
                break;
            }
        }
    }
    for i in 0..survivors.len() {
        for j in i + 1..survivors.len() {
            let (id_i, w_i, _, p_i) = &survivors[i];
            let (id_j, w_j, _, p_j) = &survivors[j];
            if w_i == w_j && point_distance(p_i, p_j) < config.d1 {
                faults.push(format!(
                    "survivors {id_i} and {id_j}: same worker closer than d1"
                ));
            }
        }
    }

    if consensus.effective_d2 > config.d1 {
        faults.push(format!(
            "effective spacing {} exceeds configured d1 {}",
            consensus.effective_d2, config.d1
        ));
    }

    let mut rep_points: Vec<(usize, Point)> = Vec::new();
    for (idx, (rep, prov)) in consensus
        .representatives
        .iter()
        .zip(&consensus.provenance)
        .enumerate()
    {
        let OpinionGeometry::Point { point, tag } = rep else {
            faults.push(format!("representative {idx}: not a point"));
            continue;
        };
        rep_points.push((idx, *point));
        if !background.region.contains_point(point, config.epsilon) {
            faults.push(format!("representative {idx}: outside the region"));
        }
        match survivors.iter().find(|(id, _, _, _)| *id == prov.id) {
            None => faults.push(format!(
                "representative {idx}: provenance {} is not a survivor",
                prov.id
            )),
            Some((_, _, s_tag, s_point)) => {
                if s_tag != tag || s_point != point {
                    faults.push(format!(
                        "representative {idx}: does not match survivor {}",
                        prov.id
                    ));
                }
            }
        }
        for f in &background.points {
            if !f.exempt
                && &f.tag == tag
                && point_distance(&f.point, point) < consensus.effective_d2
            {
                faults.push(format!(
                    "representative {idx} ({}): congestion with an existing {tag} facility",
                    prov.id
                ));
                break;
            }
        }
    }
    for i in 0..rep_points.len() {
        for j in i + 1..rep_points.len() {
            let (idx_i, p_i) = &rep_points[i];
            let (idx_j, p_j) = &rep_points[j];
            if point_distance(p_i, p_j) < consensus.effective_d2 {
                faults.push(format!(
                    "representatives {idx_i} and {idx_j}: congestion under effective spacing"
                ));
            }
        }
    }

    faults
}
