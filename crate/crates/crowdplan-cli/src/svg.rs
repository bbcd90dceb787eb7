//! SVG scene rendering.
//!
//! Conventions: the region boundary is a closed polyline, background lines
//! are solid, opinions are dashed (removed ones in a lighter stroke),
//! consensus representatives use a heavier stroke. Element order and number
//! formatting are fixed, so identical inputs produce byte-identical files.

use crowdplan_core::{ConvexRegion, Facility, Point, Segment};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpinionStatus {
    Surviving,
    Removed,
}

/// Everything the renderer draws.
pub struct Scene<'a> {
    pub region: &'a ConvexRegion,
    pub background_lines: &'a [Segment],
    pub background_points: &'a [Facility],
    pub line_opinions: Vec<(Segment, OpinionStatus)>,
    pub point_opinions: Vec<(Point, OpinionStatus)>,
    pub consensus_lines: Vec<Segment>,
    pub consensus_points: Vec<Point>,
}

const MARGIN: f64 = 2.0;

fn f(v: f64) -> String {
    format!("{v:.4}")
}

pub fn render_scene(scene: &Scene<'_>) -> String {
    let (min, max) = scene.region.bounding_box();
    let width = max.x - min.x + 2.0 * MARGIN;
    let height = max.y - min.y + 2.0 * MARGIN;
    // Map coordinates flip y so north stays up in the image.
    let tx = |x: f64| x - min.x + MARGIN;
    let ty = |y: f64| max.y - y + MARGIN;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {} {}" width="800">"#,
        f(width),
        f(height)
    );

    let ring: Vec<String> = scene
        .region
        .vertices()
        .iter()
        .map(|p| format!("{},{}", f(tx(p.x)), f(ty(p.y))))
        .collect();
    let _ = writeln!(
        out,
        r##"  <polygon points="{}" fill="none" stroke="#333333" stroke-width="0.15"/>"##,
        ring.join(" ")
    );

    for s in scene.background_lines {
        let _ = writeln!(
            out,
            r##"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#1f6f43" stroke-width="0.25"/>"##,
            f(tx(s.a().x)),
            f(ty(s.a().y)),
            f(tx(s.b().x)),
            f(ty(s.b().y))
        );
    }
    for facility in scene.background_points {
        let _ = writeln!(
            out,
            r##"  <circle cx="{}" cy="{}" r="0.45" fill="#1f6f43"/>"##,
            f(tx(facility.point.x)),
            f(ty(facility.point.y))
        );
    }

    for (s, status) in &scene.line_opinions {
        let style = match status {
            OpinionStatus::Surviving => {
                r##"stroke="#2255bb" stroke-width="0.12" stroke-dasharray="0.6,0.4""##
            }
            OpinionStatus::Removed => {
                r##"stroke="#bb4444" stroke-width="0.08" stroke-dasharray="0.25,0.35""##
            }
        };
        let _ = writeln!(
            out,
            r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" {style}/>"#,
            f(tx(s.a().x)),
            f(ty(s.a().y)),
            f(tx(s.b().x)),
            f(ty(s.b().y))
        );
    }
    for (p, status) in &scene.point_opinions {
        let style = match status {
            OpinionStatus::Surviving => r##"fill="none" stroke="#2255bb" stroke-width="0.1""##,
            OpinionStatus::Removed => r##"fill="none" stroke="#bb4444" stroke-width="0.08""##,
        };
        let _ = writeln!(
            out,
            r#"  <circle cx="{}" cy="{}" r="0.3" {style}/>"#,
            f(tx(p.x)),
            f(ty(p.y))
        );
    }

    for s in &scene.consensus_lines {
        let _ = writeln!(
            out,
            r##"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#111188" stroke-width="0.4"/>"##,
            f(tx(s.a().x)),
            f(ty(s.a().y)),
            f(tx(s.b().x)),
            f(ty(s.b().y))
        );
    }
    for p in &scene.consensus_points {
        let _ = writeln!(
            out,
            r##"  <circle cx="{}" cy="{}" r="0.6" fill="none" stroke="#111188" stroke-width="0.3"/>"##,
            f(tx(p.x)),
            f(ty(p.y))
        );
    }

    out.push_str("</svg>\n");
    out
}
