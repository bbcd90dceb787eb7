//! End-to-end aggregation of point opinions.
//!
//! Point opinions are validated against boundary, same-worker spacing and
//! existing same-provider facilities, then facility slots are split across
//! providers proportionally to proposal support with a preferential pass
//! that favours under-served providers, and finally each allocated provider
//! gets its own constrained k-medoids consensus.

use crate::clustering::{ClusterSet, cluster_medoid_with_cost, k_medoids};
use crate::geometry::{Point, point_distance};
use crate::model::{
    BackgroundInfrastructure, Consensus, ConstraintConfig, ConstraintKind, OpinionGeometry,
    OpinionId, PipelineError, PipelineEvent, PipelineStage, PointOpinionBatch, Provenance,
    RelaxationPolicy, ViolationReport, validate_point_batches,
};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Counts violations of the point pre-processing constraints without
/// mutating the dataset.
pub fn validate_points(
    batches: &[PointOpinionBatch],
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> ViolationReport {
    validate_point_batches(batches, background, config)
}

/// How the facility slots were split across providers, with the reasoning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationResult {
    /// Providers with at least one slot.
    pub allocated: BTreeMap<String, usize>,
    /// Ordered log of shares, rounding and preferential swaps.
    pub rationale: Vec<String>,
}

impl AllocationResult {
    pub fn slots(&self, provider: &str) -> usize {
        self.allocated.get(provider).copied().unwrap_or(0)
    }
}

/// Splits `total` facility slots across providers.
///
/// Shares are proportional to proposal counts (largest-remainder rounding,
/// Droop quota), capped by each provider's proposal support. A preferential
/// pass then moves single slots from well-served providers to slot-less
/// under-served ones whose proposal support is within the configured
/// relative closeness.
pub fn preferential_allocation(
    proposals: &BTreeMap<String, usize>,
    existing_within_radius: &BTreeMap<String, usize>,
    total: usize,
    config: &ConstraintConfig,
) -> Result<AllocationResult, PipelineError> {
    let support: usize = proposals.values().sum();
    if total > support {
        return Err(PipelineError::InfeasibleAllocation { total, support });
    }

    let mut rationale = Vec::new();
    // Droop quota: floor shares never exceed the slot count.
    let quota = support / (total + 1) + 1;
    rationale.push(format!(
        "proportional shares over {support} proposals, quota {quota}"
    ));

    let providers: Vec<(&String, usize)> =
        proposals.iter().map(|(tag, &count)| (tag, count)).collect();
    let mut allocated: BTreeMap<String, usize> = BTreeMap::new();
    let mut assigned = 0;
    for (tag, count) in &providers {
        let share = count / quota;
        if share > 0 {
            allocated.insert((*tag).clone(), share);
            assigned += share;
            rationale.push(format!("{tag}: floor share {share} ({count} proposals)"));
        }
    }

    // Largest-remainder rounds: one extra slot per provider per round, still
    // capped by proposal support.
    while assigned < total {
        let mut ranked: Vec<(&String, usize, usize)> = providers
            .iter()
            .filter(|(tag, count)| *count > 0 && allocated.get(*tag).copied().unwrap_or(0) < *count)
            .map(|(tag, count)| {
                let share = count / quota;
                (*tag, *count, count - share * quota)
            })
            .collect();
        // By remainder, then support, then name.
        ranked.sort_by(|a, b| b.2.cmp(&a.2).then(b.1.cmp(&a.1)).then(a.0.cmp(b.0)));
        let before = assigned;
        for (tag, _, remainder) in ranked {
            if assigned == total {
                break;
            }
            let entry = allocated.entry(tag.clone()).or_insert(0);
            *entry += 1;
            assigned += 1;
            rationale.push(format!("{tag}: +1 by remainder {remainder}"));
        }
        if assigned == before {
            // All providers capped; unreachable given the support check.
            return Err(PipelineError::InfeasibleAllocation { total, support });
        }
    }

    // Preferential pass: receivers are the slot-less providers, largest
    // support first.
    let eligibility = config.eligibility_max_existing;
    let receivers: Vec<(String, usize)> = {
        let mut r: Vec<(String, usize)> = providers
            .iter()
            .filter(|(tag, count)| *count > 0 && !allocated.contains_key(*tag))
            .map(|(tag, count)| ((*tag).clone(), *count))
            .collect();
        r.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        r
    };
    for (receiver, r_count) in receivers {
        let r_existing = existing_within_radius.get(&receiver).copied().unwrap_or(0);
        if r_existing >= eligibility {
            continue; // receiver is not under-served
        }
        // Donor: holds a slot, is well served, and has proposal support
        // within the relative closeness of the receiver's. Prefer the donor
        // with the closest support.
        let mut donor: Option<(String, usize)> = None;
        for (tag, count) in &providers {
            if allocated.get(*tag).copied().unwrap_or(0) == 0 {
                continue;
            }
            let d_existing = existing_within_radius.get(*tag).copied().unwrap_or(0);
            if d_existing < eligibility {
                continue; // donor still needs coverage itself
            }
            let closeness = (*count as f64 - r_count as f64).abs() / *count as f64;
            if closeness > config.closeness_tolerance {
                continue;
            }
            let gap = count.abs_diff(r_count);
            let better = match &donor {
                None => true,
                Some((d_tag, d_count)) => {
                    let d_gap = d_count.abs_diff(r_count);
                    gap < d_gap || (gap == d_gap && *tag < d_tag)
                }
            };
            if better {
                donor = Some(((*tag).clone(), *count));
            }
        }
        if let Some((donor_tag, donor_count)) = donor {
            let left = {
                let slots = allocated.get_mut(&donor_tag).unwrap();
                *slots -= 1;
                *slots
            };
            if left == 0 {
                allocated.remove(&donor_tag);
            }
            *allocated.entry(receiver.clone()).or_insert(0) += 1;
            rationale.push(format!(
                "preferential swap: {donor_tag} ({donor_count} proposals, {} existing) -> {receiver} ({r_count} proposals, {r_existing} existing)",
                existing_within_radius.get(&donor_tag).copied().unwrap_or(0),
            ));
        }
    }

    Ok(AllocationResult {
        allocated,
        rationale,
    })
}

#[derive(Debug, Clone)]
struct PointItem {
    id: OpinionId,
    worker: usize,
    tag: String,
    point: Point,
    alive: bool,
}

/// Runs the whole point pipeline: pre-processing removals, preferential
/// allocation over the surviving proposal counts, per-provider k-medoids,
/// and a greedy spacing-constrained selection across all providers.
pub fn aggregate_points(
    batches: &[PointOpinionBatch],
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
    total_facilities: usize,
) -> Result<Consensus, PipelineError> {
    config.validate()?;

    let mut items = Vec::new();
    for (worker, batch) in batches.iter().enumerate() {
        for (index, op) in batch.opinions.iter().enumerate() {
            items.push(PointItem {
                id: OpinionId::new(batch.annotator.clone(), index),
                worker,
                tag: op.tag.clone(),
                point: op.point,
                alive: true,
            });
        }
    }
    let mut events = Vec::new();

    // Boundary.
    for item in items.iter_mut() {
        if !background
            .region
            .contains_point(&item.point, config.epsilon)
        {
            item.alive = false;
            events.push(PipelineEvent::Removed {
                id: item.id.clone(),
                constraint: ConstraintKind::Boundary,
            });
        }
    }
    // Intra-separability: keep the first of a violating same-worker pair.
    for slot in 0..items.len() {
        if !items[slot].alive {
            continue;
        }
        let crowded = items[..slot].iter().any(|earlier| {
            earlier.alive
                && earlier.worker == items[slot].worker
                && point_distance(&earlier.point, &items[slot].point) < config.d1
        });
        if crowded {
            items[slot].alive = false;
            events.push(PipelineEvent::Removed {
                id: items[slot].id.clone(),
                constraint: ConstraintKind::IntraSeparability,
            });
        }
    }
    // Inter-separability against existing same-provider facilities.
    for item in items.iter_mut() {
        if !item.alive {
            continue;
        }
        let blocked = background.points.iter().any(|f| {
            !f.exempt && f.tag == item.tag && point_distance(&f.point, &item.point) < config.d1
        });
        if blocked {
            item.alive = false;
            events.push(PipelineEvent::Removed {
                id: item.id.clone(),
                constraint: ConstraintKind::InterSeparability,
            });
        }
    }

    let survivors: Vec<usize> = items
        .iter()
        .enumerate()
        .filter(|(_, it)| it.alive)
        .map(|(slot, _)| slot)
        .collect();
    if survivors.is_empty() {
        return Err(PipelineError::InsufficientSurvivors {
            stage: PipelineStage::InterSeparability,
            survivors: 0,
            needed: total_facilities.max(1),
        });
    }

    // Slots per provider, from surviving support.
    let mut proposal_counts: BTreeMap<String, usize> = BTreeMap::new();
    for &slot in &survivors {
        *proposal_counts.entry(items[slot].tag.clone()).or_insert(0) += 1;
    }
    let existing_counts = existing_counts_within_radius(background, config);
    let allocation =
        preferential_allocation(&proposal_counts, &existing_counts, total_facilities, config)?;

    // Providers in descending slot order (ties: larger support, then name).
    let mut provider_order: Vec<(String, usize)> = allocation
        .allocated
        .iter()
        .map(|(tag, &slots)| (tag.clone(), slots))
        .collect();
    provider_order.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(proposal_counts[&b.0].cmp(&proposal_counts[&a.0]))
            .then(a.0.cmp(&b.0))
    });

    // Cluster each provider's surviving points.
    struct ProviderClusters {
        member_slots: Vec<usize>,
        clusters: ClusterSet,
    }
    let mut clustered = Vec::new();
    for (tag, slots) in &provider_order {
        let member_slots: Vec<usize> = survivors
            .iter()
            .copied()
            .filter(|&s| &items[s].tag == tag)
            .collect();
        if member_slots.len() < *slots {
            return Err(PipelineError::InsufficientProviderOpinions {
                provider: tag.clone(),
                available: member_slots.len(),
                slots: *slots,
            });
        }
        let distance = |i: usize, j: usize| {
            point_distance(&items[member_slots[i]].point, &items[member_slots[j]].point)
        };
        let clusters = k_medoids(
            member_slots.len(),
            *slots,
            &distance,
            config.seed,
            config.max_iter,
        )?;
        clustered.push(ProviderClusters {
            member_slots,
            clusters,
        });
    }

    // Greedy selection across every provider's clusters, all sharing one
    // effective spacing threshold (relaxed together when decay is on).
    struct SelectionUnit {
        cluster: usize,
        /// Members by item slot, ascending cost order.
        members: Vec<usize>,
        size: usize,
    }
    let mut units = Vec::new();
    for pc in &clustered {
        let distance = |i: usize, j: usize| {
            point_distance(
                &items[pc.member_slots[i]].point,
                &items[pc.member_slots[j]].point,
            )
        };
        let mut order: Vec<usize> = (0..pc.clusters.clusters.len()).collect();
        let costs: Vec<f64> = pc
            .clusters
            .clusters
            .iter()
            .map(|members| {
                cluster_medoid_with_cost(members, &distance)
                    .map(|(_, c)| c)
                    .unwrap_or(0.0)
            })
            .collect();
        order.sort_by(|&a, &b| {
            pc.clusters.clusters[b]
                .len()
                .cmp(&pc.clusters.clusters[a].len())
                .then(costs[a].total_cmp(&costs[b]))
                .then(a.cmp(&b))
        });
        for ci in order {
            let members = &pc.clusters.clusters[ci];
            // Sort members by (cost, id) once; point clusters are small.
            let mut by_cost: Vec<(f64, usize)> = members
                .iter()
                .map(|&m| {
                    let cost: f64 = members.iter().map(|&o| distance(m, o)).sum();
                    (cost, m)
                })
                .collect();
            by_cost.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            units.push(SelectionUnit {
                cluster: ci,
                members: by_cost
                    .into_iter()
                    .map(|(_, local)| pc.member_slots[local])
                    .collect(),
                size: members.len(),
            });
        }
    }

    let mut effective = config.d1;
    let mut relaxations = 0;
    let picks: Vec<usize> = loop {
        let mut chosen: Vec<usize> = Vec::with_capacity(units.len());
        let mut blocked: Option<usize> = None;
        'units: for (ui, unit) in units.iter().enumerate() {
            for &slot in &unit.members {
                let p = &items[slot].point;
                let clear_existing = background.points.iter().all(|f| {
                    f.exempt || f.tag != items[slot].tag || point_distance(&f.point, p) >= effective
                });
                let clear_chosen = chosen
                    .iter()
                    .all(|&c| point_distance(&items[c].point, p) >= effective);
                if clear_existing && clear_chosen {
                    chosen.push(slot);
                    continue 'units;
                }
            }
            blocked = Some(ui);
            break;
        }
        match blocked {
            None => break chosen,
            Some(ui) => {
                if config.relaxation == RelaxationPolicy::Strict
                    || relaxations >= config.max_relaxations
                {
                    return Err(PipelineError::InfeasibleSelection {
                        cluster: units[ui].cluster,
                        effective_d2: effective,
                        relaxations,
                    });
                }
                effective *= config.decay_factor;
                relaxations += 1;
            }
        }
    };

    let mut representatives = Vec::with_capacity(picks.len());
    let mut provenance = Vec::with_capacity(picks.len());
    let mut cluster_sizes = Vec::with_capacity(picks.len());
    for (unit, &slot) in units.iter().zip(&picks) {
        let item = &items[slot];
        representatives.push(OpinionGeometry::Point {
            point: item.point,
            tag: item.tag.clone(),
        });
        provenance.push(Provenance {
            id: item.id.clone(),
            original: OpinionGeometry::Point {
                point: item.point,
                tag: item.tag.clone(),
            },
        });
        cluster_sizes.push(unit.size);
    }

    Ok(Consensus {
        representatives,
        cluster_sizes,
        effective_d2: effective,
        provenance,
        events,
        survivors: survivors.len(),
    })
}

/// Existing facilities per provider within the allocation radius of the
/// region centroid.
pub fn existing_counts_within_radius(
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> BTreeMap<String, usize> {
    let anchor = background.region.centroid();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for f in &background.points {
        if point_distance(&f.point, &anchor) <= config.allocation_radius {
            *counts.entry(f.tag.clone()).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexRegion, Point};
    use crate::model::{Facility, PointOpinion};
    use alloc::vec;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y).unwrap()
    }

    fn counts(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(t, c)| (String::from(*t), *c)).collect()
    }

    fn table4_proposals() -> BTreeMap<String, usize> {
        counts(&[
            ("SBI", 51),
            ("AXIS", 24),
            ("ICICI", 21),
            ("BOB", 6),
            ("HDFC", 6),
            ("IDBI", 3),
        ])
    }

    fn table4_existing() -> BTreeMap<String, usize> {
        counts(&[
            ("SBI", 1),
            ("AXIS", 6),
            ("ICICI", 2),
            ("BOB", 1),
            ("HDFC", 6),
            ("IDBI", 2),
        ])
    }

    #[test]
    fn allocation_reproduces_bank_case() {
        let config = ConstraintConfig::new(1.0, 1.0, 10.0, 3);
        let result =
            preferential_allocation(&table4_proposals(), &table4_existing(), 3, &config).unwrap();
        assert_eq!(result.allocated, counts(&[("SBI", 2), ("ICICI", 1)]));
        let total: usize = result.allocated.values().sum();
        assert_eq!(total, 3);
        assert!(
            result
                .rationale
                .iter()
                .any(|line| line.contains("preferential swap: AXIS")),
            "swap away from the well-served provider must be logged: {:?}",
            result.rationale
        );
    }

    #[test]
    fn allocation_single_provider_takes_all() {
        let config = ConstraintConfig::new(1.0, 1.0, 10.0, 3);
        let result =
            preferential_allocation(&counts(&[("SBI", 51)]), &counts(&[("SBI", 1)]), 3, &config)
                .unwrap();
        assert_eq!(result.allocated, counts(&[("SBI", 3)]));
    }

    #[test]
    fn allocation_equal_providers_split_evenly() {
        let config = ConstraintConfig::new(1.0, 1.0, 10.0, 2);
        let result = preferential_allocation(
            &counts(&[("A", 10), ("B", 10)]),
            &counts(&[("A", 1), ("B", 1)]),
            2,
            &config,
        )
        .unwrap();
        assert_eq!(result.allocated, counts(&[("A", 1), ("B", 1)]));
        assert!(
            result.rationale.iter().all(|l| !l.contains("swap")),
            "no swap may trigger"
        );
    }

    #[test]
    fn allocation_conserves_total() {
        let config = ConstraintConfig::new(1.0, 1.0, 10.0, 3);
        for total in 1..=10 {
            let result = preferential_allocation(
                &counts(&[("A", 7), ("B", 5), ("C", 2), ("D", 1)]),
                &counts(&[("A", 4), ("B", 0), ("C", 1), ("D", 9)]),
                total,
                &config,
            )
            .unwrap();
            let sum: usize = result.allocated.values().sum();
            assert_eq!(sum, total, "total {total}");
            for (tag, slots) in &result.allocated {
                assert!(*slots >= 1);
                let support = [("A", 7usize), ("B", 5), ("C", 2), ("D", 1)]
                    .iter()
                    .find(|(t, _)| t == tag)
                    .unwrap()
                    .1;
                assert!(*slots <= support, "{tag} over its support");
            }
        }
    }

    #[test]
    fn allocation_infeasible_when_total_exceeds_support() {
        let config = ConstraintConfig::new(1.0, 1.0, 10.0, 3);
        let err =
            preferential_allocation(&counts(&[("A", 2)]), &counts(&[]), 3, &config).unwrap_err();
        assert_eq!(
            err,
            PipelineError::InfeasibleAllocation {
                total: 3,
                support: 2
            }
        );
    }

    #[test]
    fn swap_requires_closeness_and_need() {
        let config = ConstraintConfig::new(1.0, 1.0, 10.0, 1);
        // Receiver far in support: no swap even though it is under-served.
        let result = preferential_allocation(
            &counts(&[("A", 30), ("B", 10)]),
            &counts(&[("A", 6), ("B", 0)]),
            1,
            &config,
        )
        .unwrap();
        assert_eq!(result.allocated, counts(&[("A", 1)]));

        // Close in support and donor well served: swap happens.
        let result = preferential_allocation(
            &counts(&[("A", 30), ("B", 27)]),
            &counts(&[("A", 6), ("B", 0)]),
            1,
            &config,
        )
        .unwrap();
        assert_eq!(result.allocated, counts(&[("B", 1)]));

        // Donor under-served too: nothing moves.
        let result = preferential_allocation(
            &counts(&[("A", 30), ("B", 27)]),
            &counts(&[("A", 1), ("B", 0)]),
            1,
            &config,
        )
        .unwrap();
        assert_eq!(result.allocated, counts(&[("A", 1)]));
    }

    fn square_region(side: f64) -> ConvexRegion {
        ConvexRegion::new(vec![
            pt(0.0, 0.0),
            pt(side, 0.0),
            pt(side, side),
            pt(0.0, side),
        ])
        .unwrap()
    }

    fn blob_batches() -> Vec<PointOpinionBatch> {
        // Two tight blobs of one provider, spacing within a blob >= d1.
        let mut batches = Vec::new();
        for w in 0..4 {
            let dx = w as f64 * 1.5;
            batches.push(PointOpinionBatch {
                annotator: format!("w{}", w + 1),
                opinions: vec![
                    PointOpinion {
                        tag: "SBI".into(),
                        point: pt(10.0 + dx, 10.0),
                    },
                    PointOpinion {
                        tag: "SBI".into(),
                        point: pt(80.0 + dx, 80.0),
                    },
                ],
            });
        }
        batches
    }

    #[test]
    fn aggregate_points_two_blobs_one_medoid_each() {
        let region = square_region(100.0);
        let background = BackgroundInfrastructure::new(vec![], vec![], region, 1e-9).unwrap();
        let mut config = ConstraintConfig::new(1.0, 1.0, 10.0, 2);
        for seed in 0..20 {
            config.seed = seed;
            let consensus = aggregate_points(&blob_batches(), &background, &config, 2).unwrap();
            assert_eq!(consensus.representatives.len(), 2);
            let mut xs: Vec<f64> = consensus
                .representatives
                .iter()
                .map(|r| match r {
                    OpinionGeometry::Point { point, .. } => point.x,
                    _ => panic!("point pipeline must produce points"),
                })
                .collect();
            xs.sort_by(f64::total_cmp);
            assert!(xs[0] < 20.0 && xs[1] > 70.0, "seed {seed}: one per blob");
        }
    }

    #[test]
    fn aggregate_points_identical_points_tie_break_lowest_id() {
        let region = square_region(100.0);
        let background = BackgroundInfrastructure::new(vec![], vec![], region, 1e-9).unwrap();
        // One provider, one slot; all opinions identical across workers (no
        // intra violation: one opinion per worker).
        let batches: Vec<PointOpinionBatch> = (0..3)
            .map(|w| PointOpinionBatch {
                annotator: format!("w{}", w + 1),
                opinions: vec![PointOpinion {
                    tag: "SBI".into(),
                    point: pt(50.0, 50.0),
                }],
            })
            .collect();
        let config = ConstraintConfig::new(1.0, 1.0, 10.0, 1);
        let consensus = aggregate_points(&batches, &background, &config, 1).unwrap();
        assert_eq!(consensus.provenance[0].id, OpinionId::new("w1", 0));
    }

    #[test]
    fn aggregate_points_errors_when_provider_lacks_survivors() {
        let region = square_region(100.0);
        // The only SBI opinion sits on an existing SBI facility.
        let background = BackgroundInfrastructure::new(
            vec![],
            vec![Facility {
                tag: "SBI".into(),
                point: pt(50.0, 50.0),
                exempt: false,
            }],
            region,
            1e-9,
        )
        .unwrap();
        let batches = vec![PointOpinionBatch {
            annotator: "w1".into(),
            opinions: vec![PointOpinion {
                tag: "SBI".into(),
                point: pt(50.2, 50.0),
            }],
        }];
        let config = ConstraintConfig::new(1.0, 1.0, 10.0, 1);
        let err = aggregate_points(&batches, &background, &config, 1).unwrap_err();
        assert!(matches!(err, PipelineError::InsufficientSurvivors { .. }));
    }

    #[test]
    fn aggregate_points_removals_logged_per_constraint() {
        let region = square_region(100.0);
        let background = BackgroundInfrastructure::new(
            vec![],
            vec![Facility {
                tag: "SBI".into(),
                point: pt(20.0, 20.0),
                exempt: false,
            }],
            region,
            1e-9,
        )
        .unwrap();
        let batches = vec![
            PointOpinionBatch {
                annotator: "w1".into(),
                opinions: vec![
                    PointOpinion {
                        tag: "SBI".into(),
                        point: pt(50.0, 50.0),
                    },
                    // Too close to the sibling above.
                    PointOpinion {
                        tag: "SBI".into(),
                        point: pt(50.5, 50.0),
                    },
                    // Outside.
                    PointOpinion {
                        tag: "SBI".into(),
                        point: pt(120.0, 50.0),
                    },
                ],
            },
            PointOpinionBatch {
                annotator: "w2".into(),
                opinions: vec![
                    // On top of the existing facility.
                    PointOpinion {
                        tag: "SBI".into(),
                        point: pt(20.3, 20.0),
                    },
                    PointOpinion {
                        tag: "SBI".into(),
                        point: pt(60.0, 60.0),
                    },
                    PointOpinion {
                        tag: "SBI".into(),
                        point: pt(70.0, 70.0),
                    },
                ],
            },
        ];
        let config = ConstraintConfig::new(1.0, 1.0, 10.0, 3);
        let consensus = aggregate_points(&batches, &background, &config, 2).unwrap();
        assert_eq!(consensus.survivors, 3);
        let removed: Vec<(OpinionId, ConstraintKind)> = consensus
            .events
            .iter()
            .map(|e| match e {
                PipelineEvent::Removed { id, constraint } => (id.clone(), *constraint),
                _ => panic!("points are never adjusted"),
            })
            .collect();
        assert!(removed.contains(&(OpinionId::new("w1", 1), ConstraintKind::IntraSeparability)));
        assert!(removed.contains(&(OpinionId::new("w1", 2), ConstraintKind::Boundary)));
        assert!(removed.contains(&(OpinionId::new("w2", 0), ConstraintKind::InterSeparability)));
        assert_eq!(removed.len(), 3);
    }

    #[test]
    fn aggregate_points_consensus_respects_spacing() {
        let region = square_region(100.0);
        let background = BackgroundInfrastructure::new(vec![], vec![], region, 1e-9).unwrap();
        let config = ConstraintConfig::new(5.0, 5.0, 10.0, 2);
        let consensus = aggregate_points(&blob_batches(), &background, &config, 2).unwrap();
        let points: Vec<Point> = consensus
            .representatives
            .iter()
            .map(|r| match r {
                OpinionGeometry::Point { point, .. } => *point,
                _ => unreachable!(),
            })
            .collect();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                assert!(point_distance(&points[i], &points[j]) >= consensus.effective_d2);
            }
        }
        assert!(consensus.effective_d2 <= config.d1);
    }
}
