//! Dataset ingestion and serialization.
//!
//! Two input syntaxes are supported: a structured JSON document carrying the
//! whole scenario (region, background, opinion batches and constraints) and
//! flat per-opinion CSV tables as a convenience. JSON is canonical; a CSV
//! table replaces the opinion batches of a JSON base document.
//!
//! Ingestion is strict about malformed input (fatal errors with positions)
//! and lenient about content: degenerate rows and opinions flagged as not in
//! an open space are dropped with a warning, out-of-range coordinates are
//! kept but flagged (the boundary stage decides).

use crowdplan_core::model::ModelError;
use crowdplan_core::{
    BackgroundInfrastructure, Batches, ConstraintConfig, ConvexRegion, Facility, GeometryError,
    LineOpinionBatch, Point, PointOpinion, PointOpinionBatch, RelaxationPolicy, Segment,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {message}")]
    CsvRow {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid region: {0}")]
    Region(GeometryError),
    #[error("{context}: {source}")]
    Geometry {
        context: String,
        source: GeometryError,
    },
    #[error(transparent)]
    Background(#[from] ModelError),
    #[error("invalid constraints: {0}")]
    Config(#[from] crowdplan_core::model::ConfigError),
    #[error("duplicate annotator id {0}")]
    DuplicateAnnotator(String),
    #[error("the document must contain exactly one of line_batches or point_batches")]
    AmbiguousKind,
    #[error("{0}")]
    Schema(String),
}

/// The canonical JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDoc {
    pub region: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub background_lines: Vec<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub background_points: Vec<FacilityDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_batches: Option<Vec<LineBatchDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_batches: Option<Vec<PointBatchDoc>>,
    pub constraints: ConstraintsDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacilityDoc {
    pub tag: String,
    pub point: [f64; 2],
    #[serde(default, skip_serializing_if = "is_false")]
    pub exempt: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineBatchDoc {
    pub annotator: String,
    pub opinions: Vec<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointBatchDoc {
    pub annotator: String,
    pub opinions: Vec<PointOpinionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointOpinionDoc {
    pub tag: String,
    pub point: [f64; 2],
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub open_space: bool,
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Mirror of `ConstraintConfig`; optional knobs fall back to the library
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsDoc {
    pub d1: f64,
    pub d2: f64,
    pub max_length: f64,
    pub k_star: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_relaxations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eligibility_max_existing: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closeness_tolerance: Option<f64>,
}

pub fn parse_relaxation(name: &str) -> Result<RelaxationPolicy, LoadError> {
    match name {
        "strict" => Ok(RelaxationPolicy::Strict),
        "geometric-decay" => Ok(RelaxationPolicy::GeometricDecay),
        other => Err(LoadError::Schema(format!(
            "unknown relaxation policy {other:?} (expected \"strict\" or \"geometric-decay\")"
        ))),
    }
}

pub fn relaxation_name(policy: RelaxationPolicy) -> &'static str {
    match policy {
        RelaxationPolicy::Strict => "strict",
        RelaxationPolicy::GeometricDecay => "geometric-decay",
    }
}

impl ConstraintsDoc {
    pub fn to_config(&self) -> Result<ConstraintConfig, LoadError> {
        let mut config = ConstraintConfig::new(self.d1, self.d2, self.max_length, self.k_star);
        if let Some(v) = self.max_iter {
            config.max_iter = v;
        }
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(name) = &self.relaxation {
            config.relaxation = parse_relaxation(name)?;
        }
        if let Some(v) = self.decay_factor {
            config.decay_factor = v;
        }
        if let Some(v) = self.max_relaxations {
            config.max_relaxations = v;
        }
        if let Some(v) = self.allocation_radius {
            config.allocation_radius = v;
        }
        if let Some(v) = self.eligibility_max_existing {
            config.eligibility_max_existing = v;
        }
        if let Some(v) = self.closeness_tolerance {
            config.closeness_tolerance = v;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_config(config: &ConstraintConfig) -> Self {
        let defaults =
            ConstraintConfig::new(config.d1, config.d2, config.max_length, config.k_star);
        let keep = |differs: bool| differs;
        ConstraintsDoc {
            d1: config.d1,
            d2: config.d2,
            max_length: config.max_length,
            k_star: config.k_star,
            max_iter: keep(config.max_iter != defaults.max_iter).then_some(config.max_iter),
            epsilon: keep(config.epsilon != defaults.epsilon).then_some(config.epsilon),
            seed: keep(config.seed != defaults.seed).then_some(config.seed),
            relaxation: keep(config.relaxation != defaults.relaxation)
                .then(|| relaxation_name(config.relaxation).to_string()),
            decay_factor: keep(config.decay_factor != defaults.decay_factor)
                .then_some(config.decay_factor),
            max_relaxations: keep(config.max_relaxations != defaults.max_relaxations)
                .then_some(config.max_relaxations),
            allocation_radius: config
                .allocation_radius
                .is_finite()
                .then_some(config.allocation_radius),
            eligibility_max_existing: keep(
                config.eligibility_max_existing != defaults.eligibility_max_existing,
            )
            .then_some(config.eligibility_max_existing),
            closeness_tolerance: keep(config.closeness_tolerance != defaults.closeness_tolerance)
                .then_some(config.closeness_tolerance),
        }
    }
}

/// A fully validated in-memory dataset plus the ingestion warnings.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub batches: Batches,
    pub background: BackgroundInfrastructure,
    pub config: ConstraintConfig,
    pub warnings: Vec<String>,
}

/// Loads the canonical JSON document.
pub fn load_dataset(path: &Path) -> Result<LoadedDataset, LoadError> {
    load_dataset_with_csv(path, None, None)
}

/// Loads a JSON document, optionally replacing its opinion batches with a
/// CSV table (`worker_id,x1,y1,x2,y2` for lines, `worker_id,tag,x,y` for
/// points).
pub fn load_dataset_with_csv(
    path: &Path,
    csv_lines: Option<&Path>,
    csv_points: Option<&Path>,
) -> Result<LoadedDataset, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut doc: DatasetDoc = serde_json::from_str(&text).map_err(|source| LoadError::Json {
        path: path.display().to_string(),
        source,
    })?;

    let mut warnings = Vec::new();
    if let Some(csv) = csv_lines {
        doc.line_batches = Some(parse_line_csv(csv, &mut warnings)?);
        doc.point_batches = None;
    }
    if let Some(csv) = csv_points {
        doc.point_batches = Some(parse_point_csv(csv, &mut warnings)?);
        if csv_lines.is_none() {
            doc.line_batches = None;
        }
    }

    dataset_from_doc(&doc, warnings)
}

pub fn dataset_from_doc(
    doc: &DatasetDoc,
    mut warnings: Vec<String>,
) -> Result<LoadedDataset, LoadError> {
    let region_points = doc
        .region
        .iter()
        .map(|&[x, y]| {
            Point::new(x, y).map_err(|source| LoadError::Geometry {
                context: "region vertex".to_string(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let region = ConvexRegion::new(region_points).map_err(LoadError::Region)?;

    let config = doc.constraints.to_config()?;

    let mut background_lines = Vec::new();
    for (i, &[[x1, y1], [x2, y2]]) in doc.background_lines.iter().enumerate() {
        background_lines.push(make_segment(x1, y1, x2, y2, || {
            format!("background line {i}")
        })?);
    }
    let mut background_points = Vec::new();
    for (i, f) in doc.background_points.iter().enumerate() {
        let point = Point::new(f.point[0], f.point[1]).map_err(|source| LoadError::Geometry {
            context: format!("background facility {i} ({})", f.tag),
            source,
        })?;
        background_points.push(Facility {
            tag: f.tag.clone(),
            point,
            exempt: f.exempt,
        });
    }
    let background =
        BackgroundInfrastructure::new(background_lines, background_points, region, config.epsilon)?;

    let (bbox_min, bbox_max) = background.region.bounding_box();
    let flag_out_of_range = |what: &str, x: f64, y: f64, warnings: &mut Vec<String>| {
        if x < bbox_min.x || x > bbox_max.x || y < bbox_min.y || y > bbox_max.y {
            warnings.push(format!(
                "{what}: coordinate ({x}, {y}) outside the declared range ({}, {}) to ({}, {}); kept, the boundary stage decides",
                bbox_min.x, bbox_min.y, bbox_max.x, bbox_max.y
            ));
        }
    };

    let batches = match (&doc.line_batches, &doc.point_batches) {
        (Some(_), Some(_)) | (None, None) => return Err(LoadError::AmbiguousKind),
        (Some(line_docs), None) => {
            let mut seen = BTreeSet::new();
            let mut batches = Vec::new();
            for batch_doc in line_docs {
                check_annotator(&batch_doc.annotator, &mut seen)?;
                let mut opinions = Vec::new();
                for (j, &[[x1, y1], [x2, y2]]) in batch_doc.opinions.iter().enumerate() {
                    let what = format!("line opinion {}#{j}", batch_doc.annotator);
                    if [x1, y1, x2, y2].iter().any(|v| !v.is_finite()) {
                        return Err(LoadError::Schema(format!("{what}: non-finite coordinate")));
                    }
                    if x1 == x2 && y1 == y2 {
                        warnings.push(format!("{what}: degenerate segment, dropped"));
                        continue;
                    }
                    flag_out_of_range(&what, x1, y1, &mut warnings);
                    flag_out_of_range(&what, x2, y2, &mut warnings);
                    opinions.push(make_segment(x1, y1, x2, y2, || what.clone())?);
                }
                if opinions.len() != config.k_star {
                    warnings.push(format!(
                        "annotator {}: {} opinion(s), expected k_star = {}",
                        batch_doc.annotator,
                        opinions.len(),
                        config.k_star
                    ));
                }
                batches.push(LineOpinionBatch {
                    annotator: batch_doc.annotator.clone(),
                    opinions,
                });
            }
            Batches::Lines(batches)
        }
        (None, Some(point_docs)) => {
            let mut seen = BTreeSet::new();
            let mut batches = Vec::new();
            for batch_doc in point_docs {
                check_annotator(&batch_doc.annotator, &mut seen)?;
                let mut opinions = Vec::new();
                for (j, op) in batch_doc.opinions.iter().enumerate() {
                    let what = format!("point opinion {}#{j}", batch_doc.annotator);
                    if !op.open_space {
                        warnings.push(format!("{what}: not in an open space, dropped"));
                        continue;
                    }
                    let point = Point::new(op.point[0], op.point[1]).map_err(|source| {
                        LoadError::Geometry {
                            context: what.clone(),
                            source,
                        }
                    })?;
                    flag_out_of_range(&what, point.x, point.y, &mut warnings);
                    opinions.push(PointOpinion {
                        tag: op.tag.clone(),
                        point,
                    });
                }
                if opinions.len() != config.k_star {
                    warnings.push(format!(
                        "annotator {}: {} opinion(s), expected k_star = {}",
                        batch_doc.annotator,
                        opinions.len(),
                        config.k_star
                    ));
                }
                batches.push(PointOpinionBatch {
                    annotator: batch_doc.annotator.clone(),
                    opinions,
                });
            }
            Batches::Points(batches)
        }
    };

    Ok(LoadedDataset {
        batches,
        background,
        config,
        warnings,
    })
}

fn check_annotator(id: &str, seen: &mut BTreeSet<String>) -> Result<(), LoadError> {
    if id.is_empty() {
        return Err(LoadError::Schema("empty annotator id".to_string()));
    }
    if !seen.insert(id.to_string()) {
        return Err(LoadError::DuplicateAnnotator(id.to_string()));
    }
    Ok(())
}

fn make_segment(
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    context: impl Fn() -> String,
) -> Result<Segment, LoadError> {
    let a = Point::new(x1, y1).map_err(|source| LoadError::Geometry {
        context: context(),
        source,
    })?;
    let b = Point::new(x2, y2).map_err(|source| LoadError::Geometry {
        context: context(),
        source,
    })?;
    Segment::new(a, b).map_err(|source| LoadError::Geometry {
        context: context(),
        source,
    })
}

/// Serializes an in-memory dataset back to the canonical document; the
/// inverse of [`dataset_from_doc`] up to dropped defaults.
pub fn dataset_to_doc(
    batches: &Batches,
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> DatasetDoc {
    let region = background
        .region
        .vertices()
        .iter()
        .map(|p| [p.x, p.y])
        .collect();
    let background_lines = background
        .segments
        .iter()
        .map(|s| [[s.a().x, s.a().y], [s.b().x, s.b().y]])
        .collect();
    let background_points = background
        .points
        .iter()
        .map(|f| FacilityDoc {
            tag: f.tag.clone(),
            point: [f.point.x, f.point.y],
            exempt: f.exempt,
        })
        .collect();
    let (line_batches, point_batches) = match batches {
        Batches::Lines(lines) => (
            Some(
                lines
                    .iter()
                    .map(|b| LineBatchDoc {
                        annotator: b.annotator.clone(),
                        opinions: b
                            .opinions
                            .iter()
                            .map(|s| [[s.a().x, s.a().y], [s.b().x, s.b().y]])
                            .collect(),
                    })
                    .collect(),
            ),
            None,
        ),
        Batches::Points(points) => (
            None,
            Some(
                points
                    .iter()
                    .map(|b| PointBatchDoc {
                        annotator: b.annotator.clone(),
                        opinions: b
                            .opinions
                            .iter()
                            .map(|op| PointOpinionDoc {
                                tag: op.tag.clone(),
                                point: [op.point.x, op.point.y],
                                open_space: true,
                            })
                            .collect(),
                    })
                    .collect(),
            ),
        ),
    };
    DatasetDoc {
        region,
        background_lines,
        background_points,
        line_batches,
        point_batches,
        constraints: ConstraintsDoc::from_config(config),
    }
}

/// Writes the canonical JSON for an in-memory dataset.
pub fn write_dataset(
    batches: &Batches,
    background: &BackgroundInfrastructure,
    config: &ConstraintConfig,
) -> String {
    let doc = dataset_to_doc(batches, background, config);
    let mut out = serde_json::to_string_pretty(&doc).expect("dataset docs always serialize");
    out.push('\n');
    out
}

/// Parses a line-opinion CSV (`worker_id,x1,y1,x2,y2`). Parenthesized pair
/// syntax like `w01, (3,4), (9,4)` is accepted by stripping the decoration.
fn parse_line_csv(path: &Path, warnings: &mut Vec<String>) -> Result<Vec<LineBatchDoc>, LoadError> {
    let rows = csv_rows(path, 5, 1, warnings)?;
    let mut batches: Vec<LineBatchDoc> = Vec::new();
    for (line_no, fields) in rows {
        let worker = fields[0].clone();
        let nums = parse_floats(path, line_no, &fields[1..])?;
        let batch = match batches.iter_mut().find(|b| b.annotator == worker) {
            Some(b) => b,
            None => {
                batches.push(LineBatchDoc {
                    annotator: worker,
                    opinions: Vec::new(),
                });
                batches.last_mut().unwrap()
            }
        };
        batch
            .opinions
            .push([[nums[0], nums[1]], [nums[2], nums[3]]]);
    }
    Ok(batches)
}

/// Parses a point-opinion CSV (`worker_id,tag,x,y`).
fn parse_point_csv(
    path: &Path,
    warnings: &mut Vec<String>,
) -> Result<Vec<PointBatchDoc>, LoadError> {
    let rows = csv_rows(path, 4, 2, warnings)?;
    let mut batches: Vec<PointBatchDoc> = Vec::new();
    for (line_no, fields) in rows {
        let worker = fields[0].clone();
        let tag = fields[1].clone();
        let nums = parse_floats(path, line_no, &fields[2..])?;
        let batch = match batches.iter_mut().find(|b| b.annotator == worker) {
            Some(b) => b,
            None => {
                batches.push(PointBatchDoc {
                    annotator: worker,
                    opinions: Vec::new(),
                });
                batches.last_mut().unwrap()
            }
        };
        batch.opinions.push(PointOpinionDoc {
            tag,
            point: [nums[0], nums[1]],
            open_space: true,
        });
    }
    Ok(batches)
}

/// Splits a CSV file into trimmed fields, stripping parentheses, skipping
/// blank lines and an optional header row. A first row counts as a header
/// only when none of the fields from `numeric_from` on parse as numbers;
/// a partially numeric first row is malformed data, not a header.
fn csv_rows(
    path: &Path,
    expected_fields: usize,
    numeric_from: usize,
    warnings: &mut Vec<String>,
) -> Result<Vec<(usize, Vec<String>)>, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    let mut first_data_row = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = raw
            .split(',')
            .map(|f| f.trim().replace(['(', ')'], "").trim().to_string())
            .collect();
        if fields.len() != expected_fields {
            return Err(LoadError::CsvRow {
                path: path.display().to_string(),
                line: line_no,
                message: format!("expected {expected_fields} fields, found {}", fields.len()),
            });
        }
        if first_data_row
            && fields[numeric_from..]
                .iter()
                .all(|f| f.parse::<f64>().is_err())
        {
            warnings.push(format!("{}:{line_no}: header row skipped", path.display()));
            first_data_row = false;
            continue;
        }
        first_data_row = false;
        rows.push((line_no, fields));
    }
    Ok(rows)
}

fn parse_floats(path: &Path, line: usize, fields: &[String]) -> Result<Vec<f64>, LoadError> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|_| LoadError::CsvRow {
                path: path.display().to_string(),
                line,
                message: format!("cannot parse {f:?} as a coordinate"),
            })
        })
        .collect()
}
