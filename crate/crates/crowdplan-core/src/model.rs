//! Domain types shared by both aggregation pipelines: opinions, background
//! infrastructure, thresholds, validation reports and the final consensus.
//!
//! All types are immutable after ingestion; [`validate_dataset`] is read-only
//! and counts constraint violations without changing anything.

use crate::geometry::{
    ConvexRegion, GeometryError, Point, Segment, hausdorff_distance, point_distance,
    point_segment_distance,
};
use crate::math::round;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

/// A crowd worker. Attributes are free-form metadata (education, location,
/// ...) and play no role in aggregation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotator {
    pub id: String,
    pub attributes: BTreeMap<String, String>,
}

impl Annotator {
    pub fn new(id: impl Into<String>) -> Self {
        Annotator {
            id: id.into(),
            attributes: BTreeMap::new(),
        }
    }
}

/// One worker's set of proposed line segments.
#[derive(Debug, Clone, PartialEq)]
pub struct LineOpinionBatch {
    pub annotator: String,
    pub opinions: Vec<Segment>,
}

/// A point opinion tagged with the facility provider it is for.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOpinion {
    pub tag: String,
    pub point: Point,
}

/// One worker's set of proposed facility points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOpinionBatch {
    pub annotator: String,
    pub opinions: Vec<PointOpinion>,
}

/// An existing facility. `exempt` marks facilities that do not impose the
/// separation constraint on new opinions (e.g. not in an open space).
#[derive(Debug, Clone, PartialEq)]
pub struct Facility {
    pub tag: String,
    pub point: Point,
    pub exempt: bool,
}

/// Pre-existing infrastructure the opinions are judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundInfrastructure {
    pub segments: Vec<Segment>,
    pub points: Vec<Facility>,
    pub region: ConvexRegion,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("background segment {index} is not inside the region")]
    BackgroundSegmentOutsideRegion { index: usize },
    #[error("background facility {index} ({tag}) is not inside the region")]
    BackgroundPointOutsideRegion { index: usize, tag: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl BackgroundInfrastructure {
    /// Validates that every background element lies within the region.
    pub fn new(
        segments: Vec<Segment>,
        points: Vec<Facility>,
        region: ConvexRegion,
        epsilon: f64,
    ) -> Result<Self, ModelError> {
        for (index, s) in segments.iter().enumerate() {
            if !region.contains_segment(s, epsilon) {
                return Err(ModelError::BackgroundSegmentOutsideRegion { index });
            }
        }
        for (index, f) in points.iter().enumerate() {
            if !region.contains_point(&f.point, epsilon) {
                return Err(ModelError::BackgroundPointOutsideRegion {
                    index,
                    tag: f.tag.clone(),
                });
            }
        }
        Ok(BackgroundInfrastructure {
            segments,
            points,
            region,
        })
    }
}

/// What to do when the greedy post-selection cannot satisfy the congestion
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxationPolicy {
    /// Fail with a diagnostic naming the blocking cluster.
    Strict,
    /// Multiply the effective threshold by `decay_factor` and redo the whole
    /// selection, up to `max_relaxations` times.
    GeometricDecay,
}

/// All thresholds and knobs, in map units unless noted.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintConfig {
    /// Separation threshold: minimum spacing between same-worker opinions and
    /// between an opinion and existing infrastructure of the same kind.
    pub d1: f64,
    /// Congestion threshold: minimum spacing among final representatives and
    /// between them and the background.
    pub d2: f64,
    /// Maximum admissible length of a consensus line.
    pub max_length: f64,
    /// Opinions per worker, and the number of consensus outputs for lines.
    pub k_star: usize,
    /// Clustering iteration cap.
    pub max_iter: usize,
    /// Geometric tolerance for on-boundary / on-segment tests.
    pub epsilon: f64,
    /// Seed for clustering initialization; reruns with the same seed are
    /// bit-identical.
    pub seed: u64,
    pub relaxation: RelaxationPolicy,
    /// Multiplier applied to the effective congestion threshold per
    /// relaxation round, in (0, 1).
    pub decay_factor: f64,
    pub max_relaxations: usize,
    /// Radius around the region centroid within which existing facilities
    /// count toward the preferential-treatment eligibility test.
    pub allocation_radius: f64,
    /// A provider with fewer than this many existing facilities within the
    /// radius counts as under-served.
    pub eligibility_max_existing: usize,
    /// Relative proposal-count closeness required for a preferential swap.
    pub closeness_tolerance: f64,
}

impl ConstraintConfig {
    /// The four thresholds every run needs; everything else starts at the
    /// documented defaults.
    pub fn new(d1: f64, d2: f64, max_length: f64, k_star: usize) -> Self {
        ConstraintConfig {
            d1,
            d2,
            max_length,
            k_star,
            max_iter: 100,
            epsilon: 1e-9,
            seed: 0,
            relaxation: RelaxationPolicy::GeometricDecay,
            decay_factor: 0.9,
            max_relaxations: 20,
            allocation_radius: f64::INFINITY,
            eligibility_max_existing: 3,
            closeness_tolerance: 0.15,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        // NaN thresholds must fail too, hence the explicit checks.
        let positive_finite = |v: f64| v.is_finite() && v > 0.0;
        if !positive_finite(self.d1) {
            return Err(ConfigError::NonPositive("d1"));
        }
        if !positive_finite(self.d2) {
            return Err(ConfigError::NonPositive("d2"));
        }
        if !positive_finite(self.max_length) {
            return Err(ConfigError::NonPositive("max_length"));
        }
        if self.k_star < 1 {
            return Err(ConfigError::ZeroCount("k_star"));
        }
        if self.max_iter < 1 {
            return Err(ConfigError::ZeroCount("max_iter"));
        }
        if !positive_finite(self.epsilon) {
            return Err(ConfigError::NonPositive("epsilon"));
        }
        if !positive_finite(self.decay_factor) || self.decay_factor >= 1.0 {
            return Err(ConfigError::OutOfRange("decay_factor", "(0, 1)"));
        }
        if !positive_finite(self.closeness_tolerance) || self.closeness_tolerance >= 1.0 {
            return Err(ConfigError::OutOfRange("closeness_tolerance", "(0, 1)"));
        }
        // The radius may be infinite (count every existing facility).
        if self.allocation_radius.is_nan() || self.allocation_radius <= 0.0 {
            return Err(ConfigError::NonPositive("allocation_radius"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("{0} must lie in {1}")]
    OutOfRange(&'static str, &'static str),
}

/// Stable identity of one opinion: the annotator plus its index within that
/// worker's batch.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpinionId {
    pub annotator: String,
    pub index: usize,
}

impl OpinionId {
    pub fn new(annotator: impl Into<String>, index: usize) -> Self {
        OpinionId {
            annotator: annotator.into(),
            index,
        }
    }
}

impl fmt::Display for OpinionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.annotator, self.index)
    }
}

/// The constraint families an opinion can violate or be removed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConstraintKind {
    Boundary,
    Intersection,
    InterSeparability,
    IntraSeparability,
}

impl ConstraintKind {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintKind::Boundary => "boundary",
            ConstraintKind::Intersection => "intersection",
            ConstraintKind::InterSeparability => "inter_separability",
            ConstraintKind::IntraSeparability => "intra_separability",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pipeline stages, used when reporting where a run fell short.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineStage {
    Ingestion,
    Boundary,
    Intersection,
    InterSeparability,
    IntraSeparability,
}

impl fmt::Display for PipelineStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PipelineStage::Ingestion => "ingestion",
            PipelineStage::Boundary => "boundary",
            PipelineStage::Intersection => "intersection",
            PipelineStage::InterSeparability => "inter_separability",
            PipelineStage::IntraSeparability => "intra_separability",
        };
        f.write_str(name)
    }
}

/// Read-only violation accounting over a dataset.
///
/// An opinion violating several constraints is listed under each of them but
/// counted once in the error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub total_opinions: usize,
    pub violations: BTreeMap<ConstraintKind, Vec<OpinionId>>,
    pub distinct_violators: usize,
    /// Percentage of distinct violating opinions, rounded to two decimals.
    pub error_rate: f64,
}

impl ViolationReport {
    pub fn from_violations(
        total_opinions: usize,
        violations: BTreeMap<ConstraintKind, Vec<OpinionId>>,
    ) -> Self {
        let mut distinct: Vec<&OpinionId> = violations.values().flatten().collect();
        distinct.sort();
        distinct.dedup();
        let distinct_violators = distinct.len();
        let error_rate = if total_opinions == 0 {
            0.0
        } else {
            round(100.0 * distinct_violators as f64 / total_opinions as f64 * 100.0) / 100.0
        };
        ViolationReport {
            total_opinions,
            violations,
            distinct_violators,
            error_rate,
        }
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.violations.get(&kind).map_or(0, Vec::len)
    }
}

/// A dataset of either line or point opinions.
#[derive(Debug, Clone, PartialEq)]
pub enum Batches {
    Lines(Vec<LineOpinionBatch>),
    Points(Vec<PointOpinionBatch>),
}

impl Batches {
    pub fn total_opinions(&self) -> usize {
        match self {
            Batches::Lines(b) => b.iter().map(|x| x.opinions.len()).sum(),
            Batches::Points(b) => b.iter().map(|x| x.opinions.len()).sum(),
        }
    }
}

/// The geometry of one opinion or representative.
#[derive(Debug, Clone, PartialEq)]
pub enum OpinionGeometry {
    Line(Segment),
    Point { point: Point, tag: String },
}

/// Where a representative came from: the opinion id and its geometry as
/// originally ingested (before any adjustment).
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub id: OpinionId,
    pub original: OpinionGeometry,
}

/// One removal or adjustment during pre-processing.
#[derive(Debug, Clone, PartialEq)]
pub enum PipelineEvent {
    Removed {
        id: OpinionId,
        constraint: ConstraintKind,
    },
    Adjusted {
        id: OpinionId,
        from: Segment,
        to: Segment,
    },
}

/// Final output of a pipeline run: the representatives, where they came
/// from, and everything that was removed or adjusted on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Consensus {
    /// The chosen representatives, in cluster processing order.
    pub representatives: Vec<OpinionGeometry>,
    /// Size of the cluster each representative was chosen from.
    pub cluster_sizes: Vec<usize>,
    /// The congestion threshold actually enforced, after any relaxation.
    /// Equals the configured `d2` for lines (or `d1` for points) when no
    /// relaxation was needed.
    pub effective_d2: f64,
    pub provenance: Vec<Provenance>,
    pub events: Vec<PipelineEvent>,
    /// Opinions that survived pre-processing and entered clustering.
    pub survivors: usize,
}

/// Errors shared by both aggregation pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("clustering error: {0}")]
    Clustering(#[from] crate::clustering::ClusteringError),
    #[error(
        "only {survivors} opinion(s) survive pre-processing, need at least {needed}; count first fell short after the {stage} stage"
    )]
    InsufficientSurvivors {
        stage: PipelineStage,
        survivors: usize,
        needed: usize,
    },
    #[error(
        "no feasible representative for cluster {cluster} at effective spacing {effective_d2} after {relaxations} relaxation(s)"
    )]
    InfeasibleSelection {
        cluster: usize,
        effective_d2: f64,
        relaxations: usize,
    },
    #[error("cannot allocate {total} facilities across a proposal support of {support}")]
    InfeasibleAllocation { total: usize, support: usize },
    #[error(
        "provider {provider} was allocated {slots} slot(s) but has only {available} surviving opinion(s)"
    )]
    InsufficientProviderOpinions {
        provider: String,
        available: usize,
        slots: usize,
    },
}

/// Counts violations of every pre-processing constraint without mutating the
/// dataset.
pub fn validate_dataset(
    batches: &Batches,
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> ViolationReport {
    match batches {
        Batches::Lines(lines) => validate_line_batches(lines, background, config),
        Batches::Points(points) => validate_point_batches(points, background, config),
    }
}

pub(crate) fn validate_line_batches(
    batches: &[LineOpinionBatch],
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> ViolationReport {
    let mut violations: BTreeMap<ConstraintKind, Vec<OpinionId>> = BTreeMap::new();
    let mut total = 0;
    for batch in batches {
        for (index, seg) in batch.opinions.iter().enumerate() {
            total += 1;
            let id = OpinionId::new(batch.annotator.clone(), index);
            if !background.region.contains_segment(seg, config.epsilon) {
                violations
                    .entry(ConstraintKind::Boundary)
                    .or_default()
                    .push(id.clone());
            }
            if !touches_background(seg, &background.segments, config.epsilon) {
                violations
                    .entry(ConstraintKind::Intersection)
                    .or_default()
                    .push(id.clone());
            }
            if background
                .segments
                .iter()
                .any(|b| hausdorff_distance(seg, b) < config.d1)
            {
                violations
                    .entry(ConstraintKind::InterSeparability)
                    .or_default()
                    .push(id.clone());
            }
            // The later member of a too-close same-worker pair is the violator.
            if batch.opinions[..index]
                .iter()
                .any(|earlier| hausdorff_distance(earlier, seg) < config.d1)
            {
                violations
                    .entry(ConstraintKind::IntraSeparability)
                    .or_default()
                    .push(id);
            }
        }
    }
    ViolationReport::from_violations(total, violations)
}

pub(crate) fn validate_point_batches(
    batches: &[PointOpinionBatch],
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> ViolationReport {
    let mut violations: BTreeMap<ConstraintKind, Vec<OpinionId>> = BTreeMap::new();
    let mut total = 0;
    for batch in batches {
        for (index, op) in batch.opinions.iter().enumerate() {
            total += 1;
            let id = OpinionId::new(batch.annotator.clone(), index);
            if !background.region.contains_point(&op.point, config.epsilon) {
                violations
                    .entry(ConstraintKind::Boundary)
                    .or_default()
                    .push(id.clone());
            }
            if background.points.iter().any(|f| {
                !f.exempt && f.tag == op.tag && point_distance(&f.point, &op.point) < config.d1
            }) {
                violations
                    .entry(ConstraintKind::InterSeparability)
                    .or_default()
                    .push(id.clone());
            }
            if batch.opinions[..index]
                .iter()
                .any(|earlier| point_distance(&earlier.point, &op.point) < config.d1)
            {
                violations
                    .entry(ConstraintKind::IntraSeparability)
                    .or_default()
                    .push(id);
            }
        }
    }
    ViolationReport::from_violations(total, violations)
}

/// Does the segment have an endpoint within `epsilon` of any background
/// segment's point set?
pub(crate) fn touches_background(seg: &Segment, background: &[Segment], epsilon: f64) -> bool {
    background.iter().any(|b| {
        point_segment_distance(&seg.a(), b) <= epsilon
            || point_segment_distance(&seg.b(), b) <= epsilon
    })
}
