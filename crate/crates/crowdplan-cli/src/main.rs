//! `crowdplan`: aggregate crowd opinions (points or line segments) into a
//! constraint-satisfying facility plan.
//!
//! Exit codes: 0 success, 1 constraint infeasibility, 2 input or usage
//! error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use crowdplan_cli::dataset::{self, LoadError, LoadedDataset};
use crowdplan_cli::report::{self, DatasetKind};
use crowdplan_cli::svg::{OpinionStatus, Scene, render_scene};
use crowdplan_core::{
    Batches, Consensus, OpinionGeometry, OpinionId, PipelineError, PipelineEvent, Segment,
    aggregate_lines, aggregate_points, existing_counts_within_radius, preferential_allocation,
    validate_dataset,
};
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "crowdplan",
    version,
    about = "Aggregate crowd opinions into a constraint-satisfying facility plan"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count constraint violations without changing the dataset.
    Validate(CommonArgs),
    /// Run the line pipeline: filter/adjust, cluster, select representatives.
    AggregateLines(CommonArgs),
    /// Run the point pipeline: filter, allocate slots per provider, cluster,
    /// select representatives.
    AggregatePoints {
        #[command(flatten)]
        common: CommonArgs,
        /// Facilities to place in total (defaults to k_star).
        #[arg(long)]
        total: Option<usize>,
    },
    /// Split facility slots across providers by proposal support and
    /// preferential treatment.
    Allocate {
        #[command(flatten)]
        common: CommonArgs,
        /// Facilities to place in total (defaults to k_star).
        #[arg(long)]
        total: Option<usize>,
    },
    /// Draw the scene (region, background, opinions, consensus) as SVG.
    Render(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Canonical JSON scenario document.
    input: PathBuf,
    /// Replace the document's opinion batches with a line CSV
    /// (worker_id,x1,y1,x2,y2).
    #[arg(long, value_name = "FILE")]
    csv_lines: Option<PathBuf>,
    /// Replace the document's opinion batches with a point CSV
    /// (worker_id,tag,x,y).
    #[arg(long, value_name = "FILE")]
    csv_points: Option<PathBuf>,
    /// Separation threshold override.
    #[arg(long)]
    d1: Option<f64>,
    /// Congestion threshold override.
    #[arg(long)]
    d2: Option<f64>,
    /// Maximum consensus-line length override.
    #[arg(long)]
    max_length: Option<f64>,
    /// Opinions per worker / number of line representatives.
    #[arg(long)]
    k_star: Option<usize>,
    /// Clustering iteration cap override.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Clustering seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Relaxation policy override: strict or geometric-decay.
    #[arg(long)]
    relaxation: Option<String>,
    /// Report format on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report (or the SVG scene for render) to this file as well.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

enum CliError {
    Load(LoadError),
    Pipeline(PipelineError),
    Io(String, std::io::Error),
    Usage(String),
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::Load(e)
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Pipeline(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) => match e {
                PipelineError::Config(_) => 2,
                _ => 1,
            },
            _ => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Load(e) => e.to_string(),
            CliError::Pipeline(e) => e.to_string(),
            CliError::Io(path, e) => format!("cannot write {path}: {e}"),
            CliError::Usage(msg) => msg.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(common) => {
            let loaded = load(&common)?;
            let kind = kind_of(&loaded.batches);
            let report = validate_dataset(&loaded.batches, &loaded.background, &loaded.config);
            let body = match common.format {
                Format::Text => report::violation_text(&report, kind),
                Format::Json => pretty(report::violation_json(&report, kind)),
            };
            emit(&common, &body)
        }
        Command::AggregateLines(common) => {
            let loaded = load(&common)?;
            let Batches::Lines(batches) = &loaded.batches else {
                return Err(CliError::Usage(
                    "aggregate-lines needs a line dataset".to_string(),
                ));
            };
            let consensus = aggregate_lines(batches, &loaded.background, &loaded.config)?;
            let ingested = loaded.batches.total_opinions();
            let body = match common.format {
                Format::Text => report::consensus_text(&consensus, DatasetKind::Lines, ingested),
                Format::Json => pretty(report::consensus_json(
                    &consensus,
                    DatasetKind::Lines,
                    ingested,
                )),
            };
            emit(&common, &body)
        }
        Command::AggregatePoints { common, total } => {
            let loaded = load(&common)?;
            let Batches::Points(batches) = &loaded.batches else {
                return Err(CliError::Usage(
                    "aggregate-points needs a point dataset".to_string(),
                ));
            };
            let total = total.unwrap_or(loaded.config.k_star);
            let consensus = aggregate_points(batches, &loaded.background, &loaded.config, total)?;
            let ingested = loaded.batches.total_opinions();
            let body = match common.format {
                Format::Text => report::consensus_text(&consensus, DatasetKind::Points, ingested),
                Format::Json => pretty(report::consensus_json(
                    &consensus,
                    DatasetKind::Points,
                    ingested,
                )),
            };
            emit(&common, &body)
        }
        Command::Allocate { common, total } => {
            let loaded = load(&common)?;
            let Batches::Points(batches) = &loaded.batches else {
                return Err(CliError::Usage(
                    "allocate needs a point dataset".to_string(),
                ));
            };
            let total = total.unwrap_or(loaded.config.k_star);
            let mut proposals: BTreeMap<String, usize> = BTreeMap::new();
            for batch in batches {
                for op in &batch.opinions {
                    *proposals.entry(op.tag.clone()).or_insert(0) += 1;
                }
            }
            let existing = existing_counts_within_radius(&loaded.background, &loaded.config);
            let allocation = preferential_allocation(&proposals, &existing, total, &loaded.config)?;
            let body = match common.format {
                Format::Text => report::allocation_text(&allocation, &proposals, &existing, total),
                Format::Json => pretty(report::allocation_json(
                    &allocation,
                    &proposals,
                    &existing,
                    total,
                )),
            };
            emit(&common, &body)
        }
        Command::Render(common) => {
            let Some(output) = common.output.clone() else {
                return Err(CliError::Usage(
                    "render needs --output <FILE> for the SVG scene".to_string(),
                ));
            };
            let loaded = load(&common)?;
            let svg = render_dataset(&loaded);
            std::fs::write(&output, &svg)
                .map_err(|e| CliError::Io(output.display().to_string(), e))?;
            Ok(())
        }
    }
}

fn kind_of(batches: &Batches) -> DatasetKind {
    match batches {
        Batches::Lines(_) => DatasetKind::Lines,
        Batches::Points(_) => DatasetKind::Points,
    }
}

fn load(common: &CommonArgs) -> Result<LoadedDataset, CliError> {
    let mut loaded = dataset::load_dataset_with_csv(
        &common.input,
        common.csv_lines.as_deref(),
        common.csv_points.as_deref(),
    )?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    // Flags override file values.
    if let Some(v) = common.d1 {
        loaded.config.d1 = v;
    }
    if let Some(v) = common.d2 {
        loaded.config.d2 = v;
    }
    if let Some(v) = common.max_length {
        loaded.config.max_length = v;
    }
    if let Some(v) = common.k_star {
        loaded.config.k_star = v;
    }
    if let Some(v) = common.max_iter {
        loaded.config.max_iter = v;
    }
    if let Some(v) = common.seed {
        loaded.config.seed = v;
    }
    if let Some(name) = &common.relaxation {
        loaded.config.relaxation = dataset::parse_relaxation(name)?;
    }
    loaded
        .config
        .validate()
        .map_err(|e| CliError::Load(LoadError::Config(e)))?;
    Ok(loaded)
}

fn pretty(value: serde_json::Value) -> String {
    let mut out = serde_json::to_string_pretty(&value).expect("reports always serialize");
    out.push('\n');
    out
}

fn emit(common: &CommonArgs, body: &str) -> Result<(), CliError> {
    print!("{body}");
    if let Some(path) = &common.output {
        std::fs::write(path, body).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    }
    Ok(())
}

/// Runs the pipeline matching the dataset kind and draws everything; when
/// aggregation is infeasible the scene is rendered without consensus
/// elements.
fn render_dataset(loaded: &LoadedDataset) -> String {
    let mut line_opinions: Vec<(Segment, OpinionStatus)> = Vec::new();
    let mut point_opinions = Vec::new();
    let mut consensus_lines = Vec::new();
    let mut consensus_points = Vec::new();

    let consensus: Option<Consensus> = match &loaded.batches {
        Batches::Lines(batches) => {
            aggregate_lines(batches, &loaded.background, &loaded.config).ok()
        }
        Batches::Points(batches) => aggregate_points(
            batches,
            &loaded.background,
            &loaded.config,
            loaded.config.k_star,
        )
        .ok(),
    };
    if consensus.is_none() {
        eprintln!("warning: aggregation infeasible, rendering the scene without consensus");
    }

    let mut removed: BTreeSet<OpinionId> = BTreeSet::new();
    let mut adjusted: BTreeMap<OpinionId, Segment> = BTreeMap::new();
    if let Some(c) = &consensus {
        for event in &c.events {
            match event {
                PipelineEvent::Removed { id, .. } => {
                    removed.insert(id.clone());
                }
                PipelineEvent::Adjusted { id, to, .. } => {
                    adjusted.insert(id.clone(), *to);
                }
            }
        }
        for rep in &c.representatives {
            match rep {
                OpinionGeometry::Line(s) => consensus_lines.push(*s),
                OpinionGeometry::Point { point, .. } => consensus_points.push(*point),
            }
        }
    }

    match &loaded.batches {
        Batches::Lines(batches) => {
            for batch in batches {
                for (index, seg) in batch.opinions.iter().enumerate() {
                    let id = OpinionId::new(batch.annotator.clone(), index);
                    if removed.contains(&id) {
                        line_opinions.push((*seg, OpinionStatus::Removed));
                    } else {
                        let shown = adjusted.get(&id).copied().unwrap_or(*seg);
                        line_opinions.push((shown, OpinionStatus::Surviving));
                    }
                }
            }
        }
        Batches::Points(batches) => {
            for batch in batches {
                for (index, op) in batch.opinions.iter().enumerate() {
                    let id = OpinionId::new(batch.annotator.clone(), index);
                    let status = if removed.contains(&id) {
                        OpinionStatus::Removed
                    } else {
                        OpinionStatus::Surviving
                    };
                    point_opinions.push((op.point, status));
                }
            }
        }
    }

    let scene = Scene {
        region: &loaded.background.region,
        background_lines: &loaded.background.segments,
        background_points: &loaded.background.points,
        line_opinions,
        point_opinions,
        consensus_lines,
        consensus_points,
    };
    render_scene(&scene)
}
