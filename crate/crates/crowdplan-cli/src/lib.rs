//! Batch front end for crowd-opinion facility planning: dataset ingestion
//! (JSON canonical, CSV convenience), report formatting, SVG scene rendering
//! and the bundled demo fixtures.

pub mod dataset;
pub mod fixtures;
pub mod report;
pub mod svg;
