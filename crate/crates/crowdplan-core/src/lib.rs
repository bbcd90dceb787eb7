//! Constraint-aware consensus of crowd-sourced facility opinions.
//!
//! Citizens propose where new facilities should go, either as 2-D points
//! (e.g. ATM counters) or as line segments (e.g. sewage lines). This crate
//! turns a pile of such opinions into a small set of representatives that
//! respect both *main* constraints (restrictions among the opinions
//! themselves: boundary, spacing, length) and *background* constraints
//! (restrictions against pre-existing infrastructure: connectivity,
//! separation, congestion).
//!
//! The building blocks:
//! - [`geometry`]: exact 2-D primitives (distances, intersection, containment,
//!   ray extension) every constraint decision rests on.
//! - [`model`]: domain types (opinions, background infrastructure, thresholds)
//!   and read-only dataset validation.
//! - [`clustering`]: seeded k-medoids over an abstract distance oracle.
//! - [`line_pipeline`] / [`point_pipeline`]: the end-to-end aggregation
//!   pipelines for segment and point opinions.
//! - [`oracle`]: independent brute-force and sampling verifiers used to
//!   certify the optimized implementations.
//!
//! The crate is `no_std`-compatible (requires `alloc`); enable the `libm`
//! feature instead of `std` for float math on bare targets.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("crowdplan-core needs either the `std` or the `libm` feature for float math");

pub mod clustering;
pub mod geometry;
pub mod line_pipeline;
mod math;
pub mod model;
pub mod oracle;
pub mod point_pipeline;

pub use clustering::{ClusterSet, ClusteringError, cluster_cost, cluster_medoid, k_medoids};
pub use geometry::{
    ConvexRegion, GeometryError, Point, Segment, SegmentEnd, clustering_distance,
    extend_to_nearest, hausdorff_distance, point_distance, point_segment_distance,
    segments_intersect,
};
pub use line_pipeline::aggregate_lines;
pub use model::{
    BackgroundInfrastructure, Batches, Consensus, ConstraintConfig, ConstraintKind, Facility,
    LineOpinionBatch, OpinionGeometry, OpinionId, PipelineError, PipelineEvent, PipelineStage,
    PointOpinion, PointOpinionBatch, RelaxationPolicy, ViolationReport, validate_dataset,
};
pub use oracle::{brute_force_clustering, sampled_hausdorff, verify_consensus};
pub use point_pipeline::{
    AllocationResult, aggregate_points, existing_counts_within_radius, preferential_allocation,
    validate_points,
};
