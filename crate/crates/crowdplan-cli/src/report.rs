//! Human-readable tables and machine-readable JSON reports.
//!
//! Every real number is printed with fixed four decimals (error rates with
//! two) so golden-file comparisons stay stable; the JSON report carries every
//! number the human table shows.

use crowdplan_core::point_pipeline::AllocationResult;
use crowdplan_core::{
    Consensus, ConstraintKind, OpinionGeometry, PipelineEvent, Segment, ViolationReport,
};
use serde_json::{Map, Value, json};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Which opinion kind a report is about; controls the constraint rows shown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Lines,
    Points,
}

impl DatasetKind {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::Lines => "lines",
            DatasetKind::Points => "points",
        }
    }

    fn constraint_rows(&self) -> &'static [ConstraintKind] {
        match self {
            DatasetKind::Lines => &[
                ConstraintKind::Boundary,
                ConstraintKind::Intersection,
                ConstraintKind::InterSeparability,
                ConstraintKind::IntraSeparability,
            ],
            DatasetKind::Points => &[
                ConstraintKind::Boundary,
                ConstraintKind::InterSeparability,
                ConstraintKind::IntraSeparability,
            ],
        }
    }
}

pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

/// Round to four decimals for JSON output.
fn round4(v: f64) -> f64 {
    (v * 10000.0).round() / 10000.0
}

fn json_f64(v: f64) -> Value {
    serde_json::Number::from_f64(round4(v))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn segment_value(s: &Segment) -> Value {
    json!([
        [json_f64(s.a().x), json_f64(s.a().y)],
        [json_f64(s.b().x), json_f64(s.b().y)]
    ])
}

pub fn violation_text(report: &ViolationReport, kind: DatasetKind) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Validation report ({})", kind.name());
    let _ = writeln!(out, "  proposed opinions    {}", report.total_opinions);
    for ck in kind.constraint_rows() {
        let _ = writeln!(out, "  {:<20} {}", ck.name(), report.count(*ck));
    }
    let _ = writeln!(out, "  distinct violators   {}", report.distinct_violators);
    let _ = writeln!(out, "  error rate           {:.2}%", report.error_rate);
    out
}

pub fn violation_json(report: &ViolationReport, kind: DatasetKind) -> Value {
    let mut violations = Map::new();
    for ck in kind.constraint_rows() {
        let ids: Vec<Value> = report
            .violations
            .get(ck)
            .map(|v| v.iter().map(|id| Value::String(id.to_string())).collect())
            .unwrap_or_default();
        violations.insert(
            ck.name().to_string(),
            json!({ "count": ids.len(), "opinions": ids }),
        );
    }
    json!({
        "kind": kind.name(),
        "total_opinions": report.total_opinions,
        "violations": Value::Object(violations),
        "distinct_violators": report.distinct_violators,
        "error_rate": round4(report.error_rate),
    })
}

pub fn consensus_text(consensus: &Consensus, kind: DatasetKind, ingested: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Consensus report ({})", kind.name());
    let _ = writeln!(out, "  ingested opinions    {ingested}");
    let _ = writeln!(out, "  survivors            {}", consensus.survivors);
    let _ = writeln!(
        out,
        "  effective spacing    {}",
        fmt4(consensus.effective_d2)
    );
    let _ = writeln!(out, "  representatives:");
    for (i, (rep, prov)) in consensus
        .representatives
        .iter()
        .zip(&consensus.provenance)
        .enumerate()
    {
        let geometry = match rep {
            OpinionGeometry::Line(s) => format!(
                "line ({}, {}) -> ({}, {})",
                fmt4(s.a().x),
                fmt4(s.a().y),
                fmt4(s.b().x),
                fmt4(s.b().y)
            ),
            OpinionGeometry::Point { point, tag } => {
                format!("{tag} point ({}, {})", fmt4(point.x), fmt4(point.y))
            }
        };
        let _ = writeln!(
            out,
            "    {}. {}  from {}  [cluster size {}]",
            i + 1,
            geometry,
            prov.id,
            consensus.cluster_sizes[i]
        );
    }
    let removed: Vec<_> = consensus
        .events
        .iter()
        .filter_map(|e| match e {
            PipelineEvent::Removed { id, constraint } => Some((id, constraint)),
            _ => None,
        })
        .collect();
    let adjusted: Vec<_> = consensus
        .events
        .iter()
        .filter_map(|e| match e {
            PipelineEvent::Adjusted { id, from, to } => Some((id, from, to)),
            _ => None,
        })
        .collect();
    let _ = writeln!(out, "  removed:             {}", removed.len());
    for (id, constraint) in &removed {
        let _ = writeln!(out, "    {id}  {constraint}");
    }
    let _ = writeln!(out, "  adjusted:            {}", adjusted.len());
    for (id, from, to) in &adjusted {
        let _ = writeln!(
            out,
            "    {id}  ({}, {}) -> ({}, {})  to  ({}, {}) -> ({}, {})",
            fmt4(from.a().x),
            fmt4(from.a().y),
            fmt4(from.b().x),
            fmt4(from.b().y),
            fmt4(to.a().x),
            fmt4(to.a().y),
            fmt4(to.b().x),
            fmt4(to.b().y)
        );
    }
    out
}

pub fn consensus_json(consensus: &Consensus, kind: DatasetKind, ingested: usize) -> Value {
    let representatives: Vec<Value> = consensus
        .representatives
        .iter()
        .zip(&consensus.provenance)
        .zip(&consensus.cluster_sizes)
        .map(|((rep, prov), &size)| {
            let mut obj = Map::new();
            obj.insert(
                "annotator".to_string(),
                Value::String(prov.id.annotator.clone()),
            );
            obj.insert("opinion_index".to_string(), json!(prov.id.index));
            obj.insert("cluster_size".to_string(), json!(size));
            match rep {
                OpinionGeometry::Line(s) => {
                    obj.insert("line".to_string(), segment_value(s));
                    if let OpinionGeometry::Line(orig) = &prov.original {
                        obj.insert("original_line".to_string(), segment_value(orig));
                    }
                }
                OpinionGeometry::Point { point, tag } => {
                    obj.insert("tag".to_string(), Value::String(tag.clone()));
                    obj.insert(
                        "point".to_string(),
                        json!([json_f64(point.x), json_f64(point.y)]),
                    );
                }
            }
            Value::Object(obj)
        })
        .collect();
    let removed: Vec<Value> = consensus
        .events
        .iter()
        .filter_map(|e| match e {
            PipelineEvent::Removed { id, constraint } => Some(json!({
                "opinion": id.to_string(),
                "constraint": constraint.name(),
            })),
            _ => None,
        })
        .collect();
    let adjusted: Vec<Value> = consensus
        .events
        .iter()
        .filter_map(|e| match e {
            PipelineEvent::Adjusted { id, from, to } => Some(json!({
                "opinion": id.to_string(),
                "from": segment_value(from),
                "to": segment_value(to),
            })),
            _ => None,
        })
        .collect();
    json!({
        "kind": kind.name(),
        "ingested": ingested,
        "survivors": consensus.survivors,
        "effective_d2": json_f64(consensus.effective_d2),
        "representatives": representatives,
        "removed": removed,
        "adjusted": adjusted,
    })
}

pub fn allocation_text(
    allocation: &AllocationResult,
    proposals: &BTreeMap<String, usize>,
    existing: &BTreeMap<String, usize>,
    total: usize,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Allocation report ({total} facilities)");
    let _ = writeln!(
        out,
        "  {:<10} {:>9} {:>9} {:>10}",
        "provider", "proposed", "existing", "allocated"
    );
    for (tag, count) in proposals {
        let _ = writeln!(
            out,
            "  {:<10} {:>9} {:>9} {:>10}",
            tag,
            count,
            existing.get(tag).copied().unwrap_or(0),
            allocation.slots(tag)
        );
    }
    let _ = writeln!(out, "  rationale:");
    for line in &allocation.rationale {
        let _ = writeln!(out, "    {line}");
    }
    out
}

pub fn allocation_json(
    allocation: &AllocationResult,
    proposals: &BTreeMap<String, usize>,
    existing: &BTreeMap<String, usize>,
    total: usize,
) -> Value {
    let providers: Vec<Value> = proposals
        .iter()
        .map(|(tag, count)| {
            json!({
                "provider": tag,
                "proposed": count,
                "existing": existing.get(tag).copied().unwrap_or(0),
                "allocated": allocation.slots(tag),
            })
        })
        .collect();
    json!({
        "total": total,
        "providers": providers,
        "rationale": allocation.rationale,
    })
}
