//! Deterministic SVG rendering: behavioral graphs as labeled digraphs,
//! traces as top-down trajectory plots, and simple line charts for training
//! curves. All numeric output is formatted with fixed precision so identical
//! inputs render byte-identically.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{BehavioralGraph, CausalGraph};
use crate::sim::scenario::ObjectKind;
use crate::sim::trace::ScenarioTrace;
use crate::sim::ScenarioSpec;

const KIND_COLORS: [(ObjectKind, &str); 5] = [
    (ObjectKind::Av, "#d62728"),
    (ObjectKind::Vehicle, "#1f77b4"),
    (ObjectKind::StaticVehicle, "#7f7f7f"),
    (ObjectKind::Pedestrian, "#2ca02c"),
    (ObjectKind::TrafficLight, "#ff7f0e"),
];

fn kind_color(kind: ObjectKind) -> &'static str {
    KIND_COLORS
        .iter()
        .find(|(k, _)| *k == kind)
        .map(|(_, c)| *c)
        .unwrap_or("#000000")
}

/// Renders a behavioral graph as a left-to-right digraph in generation
/// order: self-loops as small circles, interactions as arcs.
pub fn bg_to_svg(bg: &BehavioralGraph, cg: &CausalGraph) -> String {
    let n = bg.node_count();
    let spacing = 90.0;
    let width = 60.0 + spacing * n.max(1) as f64;
    let height = 220.0;
    let cy = 90.0;
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    svg.push_str("<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"7\" refY=\"3\" orient=\"auto\"><path d=\"M0,0 L7,3 L0,6 z\" fill=\"#333\"/></marker></defs>");
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    let x_of = |i: usize| 50.0 + spacing * i as f64;

    // interaction edges as arcs below the node row
    for i in 0..n {
        for j in 0..i {
            let Some(et) = bg.edge_type(i, j) else {
                continue;
            };
            if et != 2 {
                continue;
            }
            let (x1, x2) = (x_of(i), x_of(j));
            let sag = 30.0 + 12.0 * (i - j) as f64;
            let _ = write!(
                svg,
                "<path d=\"M {x1:.1} {:.1} Q {:.1} {:.1} {x2:.1} {:.1}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1.2\" marker-end=\"url(#arrow)\"/>",
                cy + 16.0,
                (x1 + x2) / 2.0,
                cy + 16.0 + sag,
                cy + 16.0
            );
        }
    }

    for i in 0..n {
        let x = x_of(i);
        let t = bg.type_of(i);
        let has_self = bg.edge_type(i, i) == Some(1);
        if has_self {
            let _ = write!(
                svg,
                "<circle cx=\"{x:.1}\" cy=\"{:.1}\" r=\"9\" fill=\"none\" stroke=\"#999\" stroke-width=\"1.2\"/>",
                cy - 24.0
            );
        }
        let _ = write!(
            svg,
            "<circle cx=\"{x:.1}\" cy=\"{cy:.1}\" r=\"16\" fill=\"#eef3fb\" stroke=\"#333\" stroke-width=\"1.4\"/>"
        );
        let _ = write!(
            svg,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\">{}</text>",
            cy + 4.0,
            cg.type_name(t)
        );
        let _ = write!(
            svg,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\" fill=\"#666\">{i}</text>",
            cy + 36.0
        );
    }
    svg.push_str("</svg>");
    svg
}

/// Renders a trace as a top-down summary plot: lane bands, one polyline per
/// object, footprints at the final tick and a marker at the minimal-distance
/// point.
pub fn trace_to_svg(trace: &ScenarioTrace, spec: Option<&ScenarioSpec>) -> String {
    // world bounds from the trace (plus layout if available)
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for state in &trace.states {
        for s in state {
            min_x = min_x.min(s.x);
            max_x = max_x.max(s.x);
            min_y = min_y.min(s.y);
            max_y = max_y.max(s.y);
        }
    }
    if !min_x.is_finite() {
        min_x = -10.0;
        max_x = 10.0;
        min_y = -10.0;
        max_y = 10.0;
    }
    min_x -= 8.0;
    max_x += 8.0;
    min_y -= 8.0;
    max_y += 8.0;

    let scale = (900.0 / (max_x - min_x)).min(500.0 / (max_y - min_y));
    let width = (max_x - min_x) * scale;
    let height = (max_y - min_y) * scale;
    let px = |x: f64| (x - min_x) * scale;
    let py = |y: f64| height - (y - min_y) * scale;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>");

    if let Some(spec) = spec {
        for lane in &spec.layout.lanes {
            let dir = lane.end.sub(lane.start).normalized();
            let n = crate::sim::geometry::Vec2::new(-dir.y, dir.x).scale(lane.width / 2.0);
            let c = [
                lane.start.add(n),
                lane.end.add(n),
                lane.end.sub(n),
                lane.start.sub(n),
            ];
            let _ = write!(
                svg,
                "<polygon points=\"{:.1},{:.1} {:.1},{:.1} {:.1},{:.1} {:.1},{:.1}\" fill=\"#e8e8e8\" stroke=\"none\"/>",
                px(c[0].x), py(c[0].y), px(c[1].x), py(c[1].y),
                px(c[2].x), py(c[2].y), px(c[3].x), py(c[3].y)
            );
        }
    }

    // trajectories
    let object_ids: Vec<usize> = trace
        .states
        .first()
        .map(|s| s.iter().map(|o| o.id).collect())
        .unwrap_or_default();
    for &id in &object_ids {
        let mut points = String::new();
        let mut kind = ObjectKind::Vehicle;
        for state in &trace.states {
            if let Some(s) = state.iter().find(|o| o.id == id) {
                kind = s.kind;
                let _ = write!(points, "{:.1},{:.1} ", px(s.x), py(s.y));
            }
        }
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\" opacity=\"0.8\"/>",
            points.trim_end(),
            kind_color(kind)
        );
    }

    // final footprints
    if let Some(last) = trace.states.last() {
        for s in last {
            let rect = crate::sim::geometry::OrientedRect::new(
                crate::sim::geometry::Vec2::new(s.x, s.y),
                4.6_f64.max(0.1),
                1.8_f64.max(0.1),
                s.heading,
            );
            if s.kind == ObjectKind::TrafficLight {
                let _ = write!(
                    svg,
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"{}\"/>",
                    px(s.x),
                    py(s.y),
                    kind_color(s.kind)
                );
                continue;
            }
            let c = rect.corners();
            let _ = write!(
                svg,
                "<polygon points=\"{:.1},{:.1} {:.1},{:.1} {:.1},{:.1} {:.1},{:.1}\" fill=\"{}\" opacity=\"0.65\"/>",
                px(c[0].x), py(c[0].y), px(c[1].x), py(c[1].y),
                px(c[2].x), py(c[2].y), px(c[3].x), py(c[3].y),
                kind_color(s.kind)
            );
        }
    }

    // minimal-distance marker
    if let Some(state) = trace.states.get(trace.min_distance_tick) {
        if let Some(av) = state.iter().find(|s| s.kind == ObjectKind::Av) {
            let _ = write!(
                svg,
                "<g stroke=\"#d62728\" stroke-width=\"2\"><line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\"/><line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\"/></g>",
                px(av.x) - 6.0, py(av.y) - 6.0, px(av.x) + 6.0, py(av.y) + 6.0,
                px(av.x) - 6.0, py(av.y) + 6.0, px(av.x) + 6.0, py(av.y) - 6.0
            );
        }
    }

    let _ = write!(
        svg,
        "<text x=\"10\" y=\"16\" font-family=\"monospace\" font-size=\"12\">min distance {:.3} m at tick {} (collided: {})</text>",
        trace.min_distance, trace.min_distance_tick, trace.collided
    );
    svg.push_str("</svg>");
    svg
}

/// Simple multi-series line chart (training curves).
pub fn curves_to_svg(series: &[(String, Vec<f64>)], title: &str) -> String {
    let width = 860.0;
    let height = 420.0;
    let margin = 50.0;
    let max_len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(1).max(2);
    let palette = [
        "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    ];

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = write!(
        svg,
        "<text x=\"{:.0}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{title}</text>",
        margin
    );
    // axes, y in [0, 1]
    let _ = write!(
        svg,
        "<line x1=\"{margin:.0}\" y1=\"{:.0}\" x2=\"{:.0}\" y2=\"{:.0}\" stroke=\"#333\"/>",
        height - margin,
        width - margin,
        height - margin
    );
    let _ = write!(
        svg,
        "<line x1=\"{margin:.0}\" y1=\"{:.0}\" x2=\"{margin:.0}\" y2=\"{:.0}\" stroke=\"#333\"/>",
        height - margin,
        margin
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let y = height - margin - tick * (height - 2.0 * margin);
        let _ = write!(
            svg,
            "<text x=\"{:.0}\" y=\"{y:.0}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">{tick:.2}</text>",
            margin - 6.0
        );
    }
    for (s, (name, values)) in series.iter().enumerate() {
        let color = palette[s % palette.len()];
        let mut points = String::new();
        for (k, v) in values.iter().enumerate() {
            let x = margin + (k as f64 / (max_len - 1) as f64) * (width - 2.0 * margin);
            let y = height - margin - v.clamp(0.0, 1.0) * (height - 2.0 * margin);
            let _ = write!(points, "{x:.1},{y:.1} ");
        }
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
            points.trim_end()
        );
        let _ = write!(
            svg,
            "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"11\" fill=\"{color}\">{name}</text>",
            width - margin - 180.0,
            margin + 16.0 * s as f64
        );
    }
    svg.push_str("</svg>");
    svg
}

/// Renderable inputs for the `render` entry point.
pub enum Renderable<'a> {
    Graph(&'a BehavioralGraph, &'a CausalGraph),
    Trace(&'a ScenarioTrace, Option<&'a ScenarioSpec>),
}

/// Renders to the requested format: `svg` for drawings, `csv` for the
/// columnar trace export. Unknown formats error.
pub fn render(input: &Renderable<'_>, format: &str, path: &Path) -> Result<()> {
    match (input, format) {
        (Renderable::Graph(bg, cg), "svg") => {
            std::fs::write(path, bg_to_svg(bg, cg))?;
            Ok(())
        }
        (Renderable::Trace(trace, spec), "svg") => {
            std::fs::write(path, trace_to_svg(trace, *spec))?;
            Ok(())
        }
        (Renderable::Trace(trace, _), "csv") => trace.export_csv(path),
        (_, other) => Err(Error::UnknownFormat(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphDims;

    #[test]
    fn graph_rendering_is_deterministic() {
        let cg = crate::scenarios::pedestrian_causal_graph(1);
        let mut bg = BehavioralGraph::new(GraphDims::new(3, 5, 3, 4));
        bg.push_node(0);
        bg.push_node(1);
        let a = bg_to_svg(&bg, &cg);
        let b = bg_to_svg(&bg, &cg);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
    }

    #[test]
    fn edgeless_graph_renders_nodes_only() {
        let cg = crate::scenarios::pedestrian_causal_graph(1);
        let mut bg = BehavioralGraph::new(GraphDims::new(2, 5, 3, 4));
        bg.push_node(0);
        bg.push_node(2);
        let svg = bg_to_svg(&bg, &cg);
        assert!(!svg.contains("marker-end"));
        assert_eq!(svg.matches("<circle").count(), 2); // node circles, no self-loops
    }

    #[test]
    fn unknown_format_is_rejected() {
        let cg = crate::scenarios::pedestrian_causal_graph(1);
        let bg = BehavioralGraph::new(GraphDims::new(2, 5, 3, 4));
        let err = render(
            &Renderable::Graph(&bg, &cg),
            "png",
            Path::new("/tmp/out.png"),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownFormat(_)));
    }
}
