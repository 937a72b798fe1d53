//! Fabrication output: skeleton SVG drawings and the skeleton JSON schema.
//!
//! SVG user units are millimetres, y points down (so model y is negated), and
//! every coordinate is printed with 4 decimals.

use std::fmt::Write as _;

use serde::de::DeserializeOwned;

use crate::skeleton::SkeletonGraph;
use crate::{Error, Result};

const PAD_FRACTION: f64 = 0.05;
const STRING_WIDTH_MM: f64 = 0.5;
const MARKER_WIDTH_MM: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub enum SvgElement {
    Rect {
        class: &'static str,
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    Polyline {
        class: &'static str,
        points: Vec<[f64; 2]>,
        stroke_width: f64,
        dashed: bool,
    },
    Circle {
        class: &'static str,
        cx: f64,
        cy: f64,
        r: f64,
    },
}

/// A drawing in millimetres: `view_box` is (min_x, min_y, width, height).
#[derive(Debug, Clone, PartialEq)]
pub struct SvgDocument {
    pub width_mm: f64,
    pub height_mm: f64,
    pub view_box: [f64; 4],
    pub elements: Vec<SvgElement>,
}

impl SvgDocument {
    pub fn rib_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, SvgElement::Rect { class: "rib", .. }))
            .count()
    }

    pub fn render(&self) -> String {
        let [x0, y0, w, h] = self.view_box;
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{:.4}mm\" height=\"{:.4}mm\" viewBox=\"{x0:.4} {y0:.4} {w:.4} {h:.4}\">",
            self.width_mm, self.height_mm
        );
        for e in &self.elements {
            match e {
                SvgElement::Rect { class, x, y, width, height } => {
                    let _ = writeln!(
                        out,
                        "  <rect class=\"{class}\" x=\"{x:.4}\" y=\"{y:.4}\" width=\"{width:.4}\" height=\"{height:.4}\" fill=\"#c8c8c8\" stroke=\"none\"/>"
                    );
                }
                SvgElement::Polyline { class, points, stroke_width, dashed } => {
                    let pts: Vec<String> = points.iter().map(|[x, y]| format!("{x:.4},{y:.4}")).collect();
                    let dash = if *dashed { " stroke-dasharray=\"2,1\"" } else { "" };
                    let _ = writeln!(
                        out,
                        "  <polyline class=\"{class}\" points=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"{stroke_width:.4}\"{dash}/>",
                        pts.join(" ")
                    );
                }
                SvgElement::Circle { class, cx, cy, r } => {
                    let _ = writeln!(
                        out,
                        "  <circle class=\"{class}\" cx=\"{cx:.4}\" cy=\"{cy:.4}\" r=\"{r:.4}\" fill=\"#000000\"/>"
                    );
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn mm(x: f64, y: f64) -> [f64; 2] {
    [x * 1000.0, -y * 1000.0]
}

/// Thickness of the rib whose station is nearest to `x`.
fn thickness_near(graph: &SkeletonGraph, x: f64) -> f64 {
    graph
        .ribs()
        .iter()
        .min_by(|a, b| (a.x - x).abs().total_cmp(&(b.x - x).abs()))
        .map_or(0.0, |r| r.thickness_mm)
}

pub fn skeleton_to_svg(graph: &SkeletonGraph) -> Result<SvgDocument> {
    if graph.nodes().is_empty() || graph.ribs().is_empty() {
        return Err(Error::Geometry("cannot draw an empty skeleton".into()));
    }
    let nodes = graph.nodes();
    let mut xs: Vec<f64> = nodes.iter().map(|n| n.x).collect();
    let mut ys: Vec<f64> = nodes.iter().map(|n| n.y).collect();
    for r in graph.ribs() {
        xs.push(r.x);
        ys.extend([r.y_top, r.y_bottom]);
    }
    xs.push(graph.head_boundary_x());
    let fold = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (x_lo, x_hi) = fold(&xs);
    let (y_lo, y_hi) = fold(&ys);
    let max_thickness = graph.ribs().iter().map(|r| r.thickness_mm).fold(0.0, f64::max);
    let side = (x_hi - x_lo).max(y_hi - y_lo) * 1000.0;
    let pad = (PAD_FRACTION * side).max(max_thickness);
    let [min_x, min_y] = mm(x_lo, y_hi);
    let view_box = [
        min_x - pad,
        min_y - pad,
        (x_hi - x_lo) * 1000.0 + 2.0 * pad,
        (y_hi - y_lo) * 1000.0 + 2.0 * pad,
    ];

    let mut elements = Vec::new();
    let mut ribs = graph.ribs().to_vec();
    ribs.sort_by(|a, b| a.x.total_cmp(&b.x));
    for r in &ribs {
        let [cx, top] = mm(r.x, r.y_top);
        elements.push(SvgElement::Rect {
            class: "rib",
            x: cx - r.thickness_mm / 2.0,
            y: top,
            width: r.thickness_mm,
            height: (r.y_top - r.y_bottom) * 1000.0,
        });
    }
    for &[a, b] in graph.bars() {
        let (na, nb) = (nodes[a], nodes[b]);
        elements.push(SvgElement::Polyline {
            class: "bar",
            points: vec![mm(na.x, na.y), mm(nb.x, nb.y)],
            stroke_width: thickness_near(graph, na.x.min(nb.x)),
            dashed: false,
        });
    }
    for &[a, b] in graph.strings() {
        let (na, nb) = (nodes[a], nodes[b]);
        elements.push(SvgElement::Polyline {
            class: "string",
            points: vec![mm(na.x, na.y), mm(nb.x, nb.y)],
            stroke_width: STRING_WIDTH_MM,
            dashed: true,
        });
    }
    let hx = graph.head_boundary_x();
    elements.push(SvgElement::Polyline {
        class: "head-boundary",
        points: vec![mm(hx, y_hi), mm(hx, y_lo)],
        stroke_width: MARKER_WIDTH_MM,
        dashed: true,
    });
    Ok(SvgDocument {
        width_mm: view_box[2],
        height_mm: view_box[3],
        view_box,
        elements,
    })
}

pub fn skeleton_to_json(graph: &SkeletonGraph) -> String {
    let mut text = serde_json::to_string_pretty(graph).expect("skeleton serializes");
    text.push('\n');
    text
}

pub fn skeleton_from_json(text: &str) -> Result<SkeletonGraph> {
    parse_json(text)
}

/// Deserializes `text`, reporting the JSON path of the first schema error.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}
