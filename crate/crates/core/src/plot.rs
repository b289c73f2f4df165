//! Deterministic SVG plots of profile curves in the `(x, z)` half-plane.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::{BranchTag, ClosedCurve, Crossing};
use crate::error::{Error, Result};
use crate::export::write_atomic;
use crate::integrator::{Event, EventKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    VerticalTangent,
    HorizontalTangent,
    AxisCrossing,
    SelfIntersection,
}

impl MarkerKind {
    fn class(self) -> &'static str {
        match self {
            MarkerKind::VerticalTangent => "vertical-tangent",
            MarkerKind::HorizontalTangent => "horizontal-tangent",
            MarkerKind::AxisCrossing => "axis-crossing",
            MarkerKind::SelfIntersection => "self-intersection",
        }
    }

    fn fill(self) -> &'static str {
        match self {
            MarkerKind::VerticalTangent => "#ff7f0e",
            MarkerKind::HorizontalTangent => "#9467bd",
            MarkerKind::AxisCrossing => "#7f7f7f",
            MarkerKind::SelfIntersection => "#000000",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub x: f64,
    pub z: f64,
    pub kind: MarkerKind,
}

/// Markers for the tangent and axis events in `events`. Guard events are
/// skipped. With `mirror`, each marker off the `x`-axis also gets its image
/// under `z ↦ −z`.
pub fn event_markers(events: &[Event], mirror: bool) -> Vec<Marker> {
    let mut out = Vec::new();
    for e in events {
        let kind = match e.kind {
            EventKind::VerticalTangent => MarkerKind::VerticalTangent,
            EventKind::HorizontalTangent => MarkerKind::HorizontalTangent,
            EventKind::AxisCrossing => MarkerKind::AxisCrossing,
            _ => continue,
        };
        let (x, z) = (e.state.x, e.state.z);
        out.push(Marker { x, z, kind });
        if mirror && z.abs() > 1e-9 {
            out.push(Marker { x, z: -z, kind });
        }
    }
    out
}

pub fn crossing_markers(crossings: &[Crossing]) -> Vec<Marker> {
    crossings
        .iter()
        .map(|c| Marker {
            x: c.x,
            z: c.z,
            kind: MarkerKind::SelfIntersection,
        })
        .collect()
}

fn stroke(tag: BranchTag) -> &'static str {
    match tag {
        BranchTag::Gamma => "#1f77b4",
        BranchTag::Beta => "#d62728",
        BranchTag::GammaRef => "#6baed6",
        BranchTag::BetaRef => "#ff9896",
        BranchTag::Torus => "#2ca02c",
    }
}

/// Renders `curves` and `markers` into a `width × height` SVG document with
/// equal scales on both axes.
pub fn render_svg(
    curves: &[&ClosedCurve],
    markers: &[Marker],
    width: u32,
    height: u32,
) -> Result<String> {
    if curves.iter().all(|c| c.is_empty()) {
        return Err(Error::Precondition("nothing to plot".into()));
    }
    if width < 16 || height < 16 {
        return Err(Error::Config(format!(
            "plot of {width}x{height} is too small"
        )));
    }
    let (mut x_hi, mut z_lo, mut z_hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for p in curves.iter().flat_map(|c| &c.points) {
        x_hi = x_hi.max(p.x);
        z_lo = z_lo.min(p.z);
        z_hi = z_hi.max(p.z);
    }
    let x_lo = 0.0;
    let pad = 0.05 * (x_hi - x_lo).max(z_hi - z_lo).max(1e-9);
    let (x_lo, x_hi, z_lo, z_hi) = (x_lo - pad, x_hi + pad, z_lo - pad, z_hi + pad);
    let (w, h) = (width as f64, height as f64);
    let scale = (w / (x_hi - x_lo)).min(h / (z_hi - z_lo));
    let ox = 0.5 * (w - scale * (x_hi - x_lo));
    let oz = 0.5 * (h - scale * (z_hi - z_lo));
    let px = |x: f64| ox + scale * (x - x_lo);
    let pz = |z: f64| h - oz - scale * (z - z_lo);

    let mut svg = String::new();
    // Writing into a String cannot fail.
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r##"<line class="z-axis" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#333333" stroke-width="1"/>"##,
        px(0.0),
        pz(z_lo),
        px(0.0),
        pz(z_hi)
    );
    let _ = writeln!(
        svg,
        r##"<line class="x-axis" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#bbbbbb" stroke-width="0.5" stroke-dasharray="4 3"/>"##,
        px(0.0),
        pz(0.0),
        px(x_hi),
        pz(0.0)
    );
    for curve in curves {
        let pts = &curve.points;
        let mut start = 0;
        while start < pts.len() {
            let tag = pts[start].branch;
            let mut end = start;
            while end + 1 < pts.len() && pts[end + 1].branch == tag {
                end += 1;
            }
            // Run into the first sample of the next branch so pieces join up.
            let stop = (end + 1).min(pts.len() - 1);
            let coords: Vec<String> = pts[start..=stop]
                .iter()
                .map(|p| format!("{:.3},{:.3}", px(p.x), pz(p.z)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="branch-{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                tag.as_str(),
                stroke(tag),
                coords.join(" ")
            );
            start = end + 1;
        }
    }
    for m in markers {
        let _ = writeln!(
            svg,
            r#"<circle class="{}" cx="{:.3}" cy="{:.3}" r="3" fill="{}"/>"#,
            m.kind.class(),
            px(m.x),
            pz(m.z),
            m.kind.fill()
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_svg_plot(
    curves: &[&ClosedCurve],
    markers: &[Marker],
    width: u32,
    height: u32,
    path: &Path,
) -> Result<()> {
    let svg = render_svg(curves, markers, width, height)?;
    write_atomic(path, svg.as_bytes())
}
