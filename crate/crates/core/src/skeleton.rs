//! Parametric tensegrity fish-bone skeleton.
//!
//! Ribs sit at uniform stations across the tail, from the head boundary to a
//! small margin short of the fluke tip. Each rib spans the body between the
//! lower and upper contour and is split by the spine node according to the
//! h1:h2 ratio, h1 being the height above the spine and h2 the height below.
//! Every rib contributes three nodes (top guide, spine, bottom guide):
//!
//! ```text
//!   top_i  ----string----  top_i+1
//!     |                      |
//!  spine_i ------bar------ spine_i+1
//!     |                      |
//!  bottom_i ---string---- bottom_i+1
//! ```

use petgraph::graph::UnGraph;
use serde::{Deserialize, Serialize};

use crate::profile::PolyCurve;
use crate::{Error, Result};

pub const DEFAULT_HEAD_FRACTION: f64 = 0.33;
pub const DEFAULT_N_RIBS: usize = 6;
pub const DEFAULT_THICKNESS_MM: f64 = 3.0;
/// Body length implied by Table-1 style speed/bl-s pairs of the reference robot.
pub const DEFAULT_BODY_LENGTH: f64 = 0.3251;
/// Fraction of the body length kept clear of ribs at the fluke tip.
pub const TIP_MARGIN: f64 = 0.03;
/// Envelope tolerance used by [`validate_skeleton`], meters.
pub const ENVELOPE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpineShape {
    #[default]
    Straight,
}

/// Tunable design parameters of one skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SkeletonSpec {
    pub body_length: f64,
    pub head_fraction: f64,
    pub n_ribs: usize,
    /// (h1, h2): rib height above and below the spine, as a ratio.
    pub h1_h2: (f64, f64),
    pub thickness_first_mm: f64,
    /// First-rib to last-rib thickness. Values below 1 thicken toward the tail.
    pub thickness_ratio: f64,
    pub spine_shape: SpineShape,
}

impl Default for SkeletonSpec {
    fn default() -> Self {
        Self {
            body_length: DEFAULT_BODY_LENGTH,
            head_fraction: DEFAULT_HEAD_FRACTION,
            n_ribs: DEFAULT_N_RIBS,
            h1_h2: (1.0, 1.0),
            thickness_first_mm: DEFAULT_THICKNESS_MM,
            thickness_ratio: 1.0,
            spine_shape: SpineShape::Straight,
        }
    }
}

impl SkeletonSpec {
    pub fn with_ratios(h1: f64, h2: f64, thickness_ratio: f64) -> Self {
        Self {
            h1_h2: (h1, h2),
            thickness_ratio,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if !(self.body_length > 0.0) || !self.body_length.is_finite() {
            return fail(format!("body length must be positive, got {}", self.body_length));
        }
        if !(self.head_fraction > 0.0 && self.head_fraction < 1.0 - TIP_MARGIN) {
            return fail(format!(
                "head fraction must lie in (0, {}), got {}",
                1.0 - TIP_MARGIN,
                self.head_fraction
            ));
        }
        if self.n_ribs < 2 {
            return fail(format!("need at least 2 ribs, got {}", self.n_ribs));
        }
        let (h1, h2) = self.h1_h2;
        if !(h1 > 0.0 && h2 > 0.0) || !h1.is_finite() || !h2.is_finite() {
            return fail(format!("h1:h2 must both be positive, got {h1}:{h2}"));
        }
        if !(self.thickness_first_mm > 0.0) || !self.thickness_first_mm.is_finite() {
            return fail(format!(
                "first rib thickness must be positive, got {}",
                self.thickness_first_mm
            ));
        }
        if !(self.thickness_ratio > 0.0) || !self.thickness_ratio.is_finite() {
            return fail(format!(
                "thickness ratio must be positive, got {}",
                self.thickness_ratio
            ));
        }
        Ok(())
    }

    /// Fraction of the rib span that lies below the spine node.
    pub fn spine_fraction(&self) -> f64 {
        let (h1, h2) = self.h1_h2;
        h2 / (h1 + h2)
    }
}

/// Thicknesses of all ribs, head to tail, linearly interpolated from
/// `thickness_first_mm` to `thickness_first_mm / thickness_ratio`.
pub fn rib_thicknesses(spec: &SkeletonSpec) -> Vec<f64> {
    let n = spec.n_ribs;
    let first = spec.thickness_first_mm;
    let last = first / spec.thickness_ratio;
    (0..n)
        .map(|i| match i {
            0 => first,
            i if i == n - 1 => last,
            i => first + (i as f64 / (n - 1) as f64) * (last - first),
        })
        .collect()
}

/// Each spine segment takes the thickness of the rib on its head side.
pub fn spine_segment_thicknesses(spec: &SkeletonSpec) -> Vec<f64> {
    let mut t = rib_thicknesses(spec);
    t.pop();
    t
}

/// Labels of the six reference designs, index-aligned with [`six_presets`].
pub const PRESET_LABELS: [&str; 6] = ["type1", "type2", "type3", "type4", "type5", "type6"];

/// The six reference designs: h1:h2 in {1:1, 1:2} crossed with thickness
/// ratios {1, 2, 3}.
pub fn six_presets() -> Vec<SkeletonSpec> {
    let mut out = Vec::with_capacity(6);
    for h2 in [1.0, 2.0] {
        for ratio in [1.0, 2.0, 3.0] {
            out.push(SkeletonSpec::with_ratios(1.0, h2, ratio));
        }
    }
    out
}

/// Preset by label (`type1`..`type6`, case-insensitive).
pub fn preset(label: &str) -> Result<SkeletonSpec> {
    let lower = label.to_ascii_lowercase();
    PRESET_LABELS
        .iter()
        .position(|l| *l == lower)
        .map(|i| six_presets()[i])
        .ok_or_else(|| Error::validation(format!("unknown preset `{label}` (type1..type6)")))
}

/// Preset label whose ratios and rib count match `spec`, if any.
pub fn preset_label(spec: &SkeletonSpec) -> Option<&'static str> {
    let ratio = spec.h1_h2.0 / spec.h1_h2.1;
    six_presets().iter().zip(PRESET_LABELS).find_map(|(p, label)| {
        let same = (p.h1_h2.0 / p.h1_h2.1 - ratio).abs() < 1e-12
            && (p.thickness_ratio - spec.thickness_ratio).abs() < 1e-12
            && p.n_ribs == spec.n_ribs;
        same.then_some(label)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rib {
    pub x: f64,
    pub y_top: f64,
    pub y_bottom: f64,
    pub y_spine: f64,
    pub thickness_mm: f64,
}

/// Realized skeleton: nodes, rigid bars, tension-only strings and ribs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct SkeletonGraph {
    nodes: Vec<Node>,
    bars: Vec<[usize; 2]>,
    strings: Vec<[usize; 2]>,
    ribs: Vec<Rib>,
    head_boundary_x: f64,
    body_length: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct GraphJson {
    nodes: Vec<Node>,
    bars: Vec<[usize; 2]>,
    strings: Vec<[usize; 2]>,
    ribs: Vec<Rib>,
    head_boundary_x: f64,
    body_length: f64,
}

impl TryFrom<GraphJson> for SkeletonGraph {
    type Error = String;

    fn try_from(g: GraphJson) -> std::result::Result<Self, String> {
        SkeletonGraph::new(
            g.nodes,
            g.bars,
            g.strings,
            g.ribs,
            g.head_boundary_x,
            g.body_length,
        )
        .map_err(|e| e.to_string())
    }
}

impl From<SkeletonGraph> for GraphJson {
    fn from(g: SkeletonGraph) -> Self {
        GraphJson {
            nodes: g.nodes,
            bars: g.bars,
            strings: g.strings,
            ribs: g.ribs,
            head_boundary_x: g.head_boundary_x,
            body_length: g.body_length,
        }
    }
}

impl SkeletonGraph {
    /// Checks structural invariants: node ids are 0..n in order, every edge
    /// references existing nodes, no edge appears twice, and all ribs lie
    /// behind the head boundary. Connectivity is left to [`validate_skeleton`].
    pub fn new(
        nodes: Vec<Node>,
        bars: Vec<[usize; 2]>,
        strings: Vec<[usize; 2]>,
        ribs: Vec<Rib>,
        head_boundary_x: f64,
        body_length: f64,
    ) -> Result<Self> {
        if let Some((i, n)) = nodes.iter().enumerate().find(|(i, n)| n.id != *i) {
            return Err(Error::validation(format!(
                "node at position {i} has id {}, ids must be 0..n in order",
                n.id
            )));
        }
        if nodes.iter().any(|n| !n.x.is_finite() || !n.y.is_finite()) {
            return Err(Error::validation("non-finite node coordinate"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (kind, edges) in [("bar", &bars), ("string", &strings)] {
            for &[a, b] in edges.iter() {
                if a >= nodes.len() || b >= nodes.len() {
                    return Err(Error::validation(format!(
                        "{kind} [{a}, {b}] references a missing node"
                    )));
                }
                if a == b {
                    return Err(Error::validation(format!("{kind} [{a}, {b}] is a self loop")));
                }
                if !seen.insert((a.min(b), a.max(b))) {
                    return Err(Error::validation(format!("duplicate edge [{a}, {b}]")));
                }
            }
        }
        if !(body_length > 0.0) {
            return Err(Error::validation(format!(
                "body length must be positive, got {body_length}"
            )));
        }
        if let Some(r) = ribs.iter().find(|r| r.x < head_boundary_x) {
            return Err(Error::validation(format!(
                "rib at x = {} lies inside the head (boundary {head_boundary_x})",
                r.x
            )));
        }
        Ok(Self {
            nodes,
            bars,
            strings,
            ribs,
            head_boundary_x,
            body_length,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn bars(&self) -> &[[usize; 2]] {
        &self.bars
    }

    pub fn strings(&self) -> &[[usize; 2]] {
        &self.strings
    }

    pub fn ribs(&self) -> &[Rib] {
        &self.ribs
    }

    pub fn head_boundary_x(&self) -> f64 {
        self.head_boundary_x
    }

    pub fn body_length(&self) -> f64 {
        self.body_length
    }

    /// Id of the node sitting exactly at (x, y).
    pub fn node_at(&self, x: f64, y: f64) -> Option<usize> {
        self.nodes.iter().find(|n| n.x == x && n.y == y).map(|n| n.id)
    }

    pub fn has_string(&self, a: usize, b: usize) -> bool {
        self.strings.iter().any(|&[p, q]| (p, q) == (a, b) || (p, q) == (b, a))
    }

    /// Copy with all coordinates multiplied by `factor` (thicknesses unchanged).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut g = self.clone();
        for n in &mut g.nodes {
            n.x *= factor;
            n.y *= factor;
        }
        for r in &mut g.ribs {
            r.x *= factor;
            r.y_top *= factor;
            r.y_bottom *= factor;
            r.y_spine *= factor;
        }
        g.head_boundary_x *= factor;
        g.body_length *= factor;
        g
    }
}

/// Builds the skeleton for `spec` inside the fitted body contour.
///
/// `upper` and `lower` are functions of the normalized chord; the body is
/// scaled so the chord equals `spec.body_length`.
pub fn generate_skeleton(
    spec: &SkeletonSpec,
    upper: &PolyCurve,
    lower: &PolyCurve,
) -> Result<SkeletonGraph> {
    spec.validate()?;
    let len = spec.body_length;
    let x_head = spec.head_fraction * len;
    let x_tail = len * (1.0 - TIP_MARGIN);
    let n = spec.n_ribs;
    let thickness = rib_thicknesses(spec);
    let below = spec.spine_fraction();

    let mut ribs = Vec::with_capacity(n);
    for (i, &t) in thickness.iter().enumerate() {
        let x = if i == 0 {
            x_head
        } else {
            x_head + (i as f64 / (n - 1) as f64) * (x_tail - x_head)
        };
        let s = x / len;
        let y_top = len * upper.eval(s)?;
        let y_bottom = len * lower.eval(s)?;
        let span = y_top - y_bottom;
        if !(span > 0.0) {
            return Err(Error::Geometry(format!(
                "rib {i} at x = {x:.5} m has non-positive span {span:.3e} m"
            )));
        }
        ribs.push(Rib {
            x,
            y_top,
            y_bottom,
            y_spine: y_bottom + below * span,
            thickness_mm: t,
        });
    }

    let mut nodes = Vec::with_capacity(3 * n);
    for r in &ribs {
        for y in [r.y_top, r.y_spine, r.y_bottom] {
            nodes.push(Node {
                id: nodes.len(),
                x: r.x,
                y,
            });
        }
    }
    let (top, spine, bottom) = (|i: usize| 3 * i, |i: usize| 3 * i + 1, |i: usize| 3 * i + 2);
    let mut bars = Vec::with_capacity(3 * n - 1);
    for i in 0..n {
        bars.push([top(i), spine(i)]);
        bars.push([spine(i), bottom(i)]);
    }
    for i in 0..n - 1 {
        bars.push([spine(i), spine(i + 1)]);
    }
    let mut strings = Vec::with_capacity(2 * (n - 1));
    for i in 0..n - 1 {
        strings.push([top(i), top(i + 1)]);
        strings.push([bottom(i), bottom(i + 1)]);
    }
    SkeletonGraph::new(nodes, bars, strings, ribs, x_head, len)
}

/// One manufacturability finding.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Rib end pokes out of the body contour by more than the tolerance.
    Envelope { rib: usize, excess_m: f64 },
    /// The bar/string graph falls apart into several pieces.
    Disconnected { components: usize },
    ZeroThickness { rib: usize },
    ZeroLengthMember { a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a skeleton against the body contour and for structural defects.
pub fn validate_skeleton(
    graph: &SkeletonGraph,
    upper: &PolyCurve,
    lower: &PolyCurve,
) -> ValidationReport {
    let mut violations = Vec::new();
    let len = graph.body_length;
    for (i, r) in graph.ribs.iter().enumerate() {
        let s = r.x / len;
        let excess = match (upper.eval(s), lower.eval(s)) {
            (Ok(u), Ok(l)) => (r.y_top - len * u).max(len * l - r.y_bottom).max(0.0),
            _ => f64::INFINITY,
        };
        if excess > ENVELOPE_TOL {
            violations.push(Violation::Envelope {
                rib: i,
                excess_m: excess,
            });
        }
        if !(r.thickness_mm > 0.0) {
            violations.push(Violation::ZeroThickness { rib: i });
        }
    }

    let mut g = UnGraph::<(), ()>::with_capacity(graph.nodes.len(), 0);
    for _ in &graph.nodes {
        g.add_node(());
    }
    for &[a, b] in graph.bars.iter().chain(&graph.strings) {
        g.add_edge((a as u32).into(), (b as u32).into(), ());
        let (p, q) = (graph.nodes[a], graph.nodes[b]);
        if p.x == q.x && p.y == q.y {
            violations.push(Violation::ZeroLengthMember { a, b });
        }
    }
    let components = petgraph::algo::connected_components(&g);
    if components > 1 {
        violations.push(Violation::Disconnected { components });
    }
    ValidationReport { violations }
}
