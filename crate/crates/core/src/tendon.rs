//! Two-cable antagonistic actuation of the fish-bone tail.
//!
//! The tail is a chain of rigid bodies. Body 0 is the head with the first rib
//! clamped to it; body j+1 is spine segment j together with rib j+1, hinged to
//! body j at the spine node of rib j. Joint j bends by a relative angle
//! `theta_j` (positive curls the tail toward +y) and resists with a linear
//! torsional spring `k_j`.
//!
//! A cable runs through one guide per rib. Because each cable span connects
//! guides on two neighbouring bodies, its length depends on one joint angle
//! only, and the whole cable length is a separable sum
//! `sum_j f_j(theta_j)` with
//!
//! ```text
//! f_j(theta)^2 = |u|^2 + |w|^2 - 2 (P cos(theta) + Q sin(theta))
//! ```
//!
//! where `u` is the guide's offset from the joint and `w` the next guide's
//! offset, both taken in the rest pose. The pose for a length command
//! minimizes `sum 1/2 k_j theta_j^2` subject to each taut cable having its
//! commanded length. Slack cables (commanded longer than their rest path)
//! impose nothing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::skeleton::{spine_segment_thicknesses, SkeletonGraph, SkeletonSpec, DEFAULT_THICKNESS_MM};
use crate::{Error, Result};

pub const DEFAULT_K_REF: f64 = 0.05;
/// Thickness at which a segment has stiffness `k_ref`.
pub const REF_THICKNESS_MM: f64 = DEFAULT_THICKNESS_MM;
/// Motor travel limit as a fraction of the cable's rest length.
pub const TRAVEL_LIMIT: f64 = 0.2;
pub const DEFAULT_AMPLITUDE: f64 = 0.008;
pub const DEFAULT_FREQUENCY: f64 = 1.5;
/// Required constraint accuracy of a solved pose, meters.
pub const LENGTH_TOL: f64 = 1e-9;

const CONTINUATION_STEPS: usize = 8;
const NEWTON_CAP: usize = 60;
const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableRouting {
    pub top_guides: Vec<usize>,
    pub bottom_guides: Vec<usize>,
    pub anchor_top: usize,
    pub anchor_bottom: usize,
    pub slack_length_top: f64,
    pub slack_length_bottom: f64,
}

/// Threads the top and bottom cables through every rib's guide nodes.
pub fn route_cables(graph: &SkeletonGraph) -> Result<CableRouting> {
    let ribs = graph.ribs();
    if ribs.len() < 2 {
        return Err(Error::Routing(format!("need at least 2 ribs, found {}", ribs.len())));
    }
    let mut top = Vec::with_capacity(ribs.len());
    let mut bottom = Vec::with_capacity(ribs.len());
    for (i, r) in ribs.iter().enumerate() {
        let t = graph
            .node_at(r.x, r.y_top)
            .ok_or_else(|| Error::Routing(format!("rib {i} has no top guide node")))?;
        let b = graph
            .node_at(r.x, r.y_bottom)
            .ok_or_else(|| Error::Routing(format!("rib {i} has no bottom guide node")))?;
        top.push(t);
        bottom.push(b);
    }
    for (name, guides) in [("top", &top), ("bottom", &bottom)] {
        if let Some(w) = guides.windows(2).find(|w| !graph.has_string(w[0], w[1])) {
            return Err(Error::Routing(format!(
                "no {name} string between nodes {} and {}",
                w[0], w[1]
            )));
        }
    }
    let polyline = |ids: &[usize]| -> f64 {
        ids.windows(2)
            .map(|w| {
                let (a, b) = (graph.nodes()[w[0]], graph.nodes()[w[1]]);
                (b.x - a.x).hypot(b.y - a.y)
            })
            .sum()
    };
    Ok(CableRouting {
        slack_length_top: polyline(&top),
        slack_length_bottom: polyline(&bottom),
        anchor_top: *top.last().expect("non-empty"),
        anchor_bottom: *bottom.last().expect("non-empty"),
        top_guides: top,
        bottom_guides: bottom,
    })
}

fn cubic_stiffness(thickness_mm: f64, k_ref: f64) -> f64 {
    k_ref * (thickness_mm / REF_THICKNESS_MM).powi(3)
}

/// Joint stiffnesses `k_ref * (t / t_ref)^3` for the spec's spine segments.
pub fn segment_stiffnesses(spec: &SkeletonSpec, k_ref: f64) -> Vec<f64> {
    spine_segment_thicknesses(spec)
        .into_iter()
        .map(|t| cubic_stiffness(t, k_ref))
        .collect()
}

/// Same law, reading segment thicknesses off a realized graph's ribs.
pub fn stiffnesses_from_graph(graph: &SkeletonGraph, k_ref: f64) -> Vec<f64> {
    let ribs = graph.ribs();
    ribs[..ribs.len().saturating_sub(1)]
        .iter()
        .map(|r| cubic_stiffness(r.thickness_mm, k_ref))
        .collect()
}

/// Cable length commands. Positive deltas shorten (pull in) the cable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationCommand {
    pub delta_top: f64,
    pub delta_bottom: f64,
    #[serde(default)]
    pub timestamp: f64,
}

impl ActuationCommand {
    pub fn new(delta_top: f64, delta_bottom: f64) -> Self {
        Self {
            delta_top,
            delta_bottom,
            timestamp: 0.0,
        }
    }

    pub fn check_travel(&self, routing: &CableRouting) -> Result<()> {
        for (name, d, slack) in [
            ("top", self.delta_top, routing.slack_length_top),
            ("bottom", self.delta_bottom, routing.slack_length_bottom),
        ] {
            if !d.is_finite() || d.abs() > TRAVEL_LIMIT * slack {
                return Err(Error::validation(format!(
                    "{name} cable delta {d} m exceeds travel limit {:.6} m",
                    TRAVEL_LIMIT * slack
                )));
            }
        }
        Ok(())
    }
}

/// Antagonistic sinusoid: the top cable follows `A sin(2 pi f t)` and the
/// bottom cable the opposite phase.
pub fn actuation_waveform(amplitude: f64, frequency: f64, t: f64) -> ActuationCommand {
    let d = amplitude * (2.0 * std::f64::consts::PI * frequency * t).sin();
    ActuationCommand {
        delta_top: d,
        delta_bottom: -d,
        timestamp: t,
    }
}

/// Joint bend angles and the resulting spine midline (one point per rib).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseJson", into = "PoseJson")]
pub struct TailPose {
    segment_angles: Vec<f64>,
    midline: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseJson {
    segment_angles_rad: Vec<f64>,
    midline: Vec<[f64; 2]>,
}

impl TryFrom<PoseJson> for TailPose {
    type Error = String;
    fn try_from(p: PoseJson) -> std::result::Result<Self, String> {
        if p.midline.len() != p.segment_angles_rad.len() + 1 {
            return Err("midline needs one more point than there are angles".into());
        }
        if p.segment_angles_rad.iter().any(|a| !(a.abs() < HALF_PI)) {
            return Err("segment angles must lie strictly inside (-pi/2, pi/2)".into());
        }
        Ok(TailPose {
            segment_angles: p.segment_angles_rad,
            midline: p.midline,
        })
    }
}

impl From<TailPose> for PoseJson {
    fn from(p: TailPose) -> Self {
        PoseJson {
            segment_angles_rad: p.segment_angles,
            midline: p.midline,
        }
    }
}

impl TailPose {
    pub fn segment_angles(&self) -> &[f64] {
        &self.segment_angles
    }

    pub fn midline(&self) -> &[[f64; 2]] {
        &self.midline
    }

    pub fn arc_length(&self) -> f64 {
        self.midline
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    pub fn trailing_edge(&self) -> [f64; 2] {
        *self.midline.last().expect("midline is never empty")
    }
}

/// Length terms of one cable span across one joint.
#[derive(Debug, Clone, Copy)]
struct Span {
    p: f64,
    q: f64,
    c: f64,
}

impl Span {
    fn new(u: [f64; 2], w: [f64; 2]) -> Self {
        Self {
            p: u[0] * w[0] + u[1] * w[1],
            q: u[1] * w[0] - u[0] * w[1],
            c: u[0] * u[0] + u[1] * u[1] + w[0] * w[0] + w[1] * w[1],
        }
    }

    /// (f, df/dtheta, d2f/dtheta2)
    fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let (s, c) = theta.sin_cos();
        let g = self.p * c + self.q * s;
        let dg = -self.p * s + self.q * c;
        let f = (self.c - 2.0 * g).max(0.0).sqrt();
        let df = -dg / f;
        let ddf = (g - df * df) / f;
        (f, df, ddf)
    }

    /// Shortest length reachable with |theta| <= pi/2.
    fn min_length(&self) -> f64 {
        let g_max = if self.p >= 0.0 {
            self.p.hypot(self.q)
        } else {
            self.q.abs()
        };
        (self.c - 2.0 * g_max).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cable {
    Top,
    Bottom,
}

/// Rest geometry of a routed skeleton, ready for repeated pose solves.
#[derive(Debug, Clone)]
pub struct TendonModel {
    spine: Vec<[f64; 2]>,
    top_offsets: Vec<[f64; 2]>,
    bottom_offsets: Vec<[f64; 2]>,
    top_spans: Vec<Span>,
    bottom_spans: Vec<Span>,
    slack_top: f64,
    slack_bottom: f64,
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Positions of every spine node and guide for a set of joint angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub spine: Vec<[f64; 2]>,
    pub top: Vec<[f64; 2]>,
    pub bottom: Vec<[f64; 2]>,
}

fn polyline_length(points: &[[f64; 2]]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum()
}

impl TendonModel {
    pub fn new(graph: &SkeletonGraph, routing: &CableRouting) -> Result<Self> {
        let ribs = graph.ribs();
        if routing.top_guides.len() != ribs.len() || routing.bottom_guides.len() != ribs.len() {
            return Err(Error::Routing("routing does not have one guide per rib".into()));
        }
        let pos = |id: usize| -> Result<[f64; 2]> {
            graph
                .nodes()
                .get(id)
                .map(|n| [n.x, n.y])
                .ok_or_else(|| Error::Routing(format!("guide node {id} does not exist")))
        };
        let mut spine = Vec::with_capacity(ribs.len());
        for (i, r) in ribs.iter().enumerate() {
            graph
                .node_at(r.x, r.y_spine)
                .ok_or_else(|| Error::Routing(format!("rib {i} has no spine node")))?;
            spine.push([r.x, r.y_spine]);
        }
        let top: Vec<[f64; 2]> = routing.top_guides.iter().map(|&id| pos(id)).collect::<Result<_>>()?;
        let bottom: Vec<[f64; 2]> =
            routing.bottom_guides.iter().map(|&id| pos(id)).collect::<Result<_>>()?;
        let spans = |guides: &[[f64; 2]]| -> Vec<Span> {
            (0..ribs.len() - 1)
                .map(|j| Span::new(sub(guides[j], spine[j]), sub(guides[j + 1], spine[j])))
                .collect()
        };
        Ok(Self {
            top_spans: spans(&top),
            bottom_spans: spans(&bottom),
            top_offsets: top.iter().zip(&spine).map(|(g, s)| sub(*g, *s)).collect(),
            bottom_offsets: bottom.iter().zip(&spine).map(|(g, s)| sub(*g, *s)).collect(),
            spine,
            slack_top: routing.slack_length_top,
            slack_bottom: routing.slack_length_bottom,
        })
    }

    pub fn n_joints(&self) -> usize {
        self.spine.len() - 1
    }

    pub fn slack_lengths(&self) -> (f64, f64) {
        (self.slack_top, self.slack_bottom)
    }

    fn spans(&self, cable: Cable) -> &[Span] {
        match cable {
            Cable::Top => &self.top_spans,
            Cable::Bottom => &self.bottom_spans,
        }
    }

    /// Cable length from the separable closed form.
    pub fn cable_length(&self, cable: Cable, angles: &[f64]) -> f64 {
        self.spans(cable)
            .iter()
            .zip(angles)
            .map(|(s, &a)| s.eval(a).0)
            .sum()
    }

    /// Shortest length a cable can reach with every joint inside +-pi/2.
    pub fn min_cable_length(&self, cable: Cable) -> f64 {
        self.spans(cable).iter().map(Span::min_length).sum()
    }

    /// Forward kinematics: rib 0 is clamped to the head, every later rib
    /// rotates with the spine segment that ends at it.
    pub fn kinematics(&self, angles: &[f64]) -> Kinematics {
        let n = self.spine.len();
        let mut spine = Vec::with_capacity(n);
        let mut top = Vec::with_capacity(n);
        let mut bottom = Vec::with_capacity(n);
        let mut phi = 0.0;
        let mut s = self.spine[0];
        for j in 0..n {
            if j > 0 {
                phi += angles[j - 1];
                let d = rotate(sub(self.spine[j], self.spine[j - 1]), phi);
                s = [s[0] + d[0], s[1] + d[1]];
            }
            let t = rotate(self.top_offsets[j], phi);
            let b = rotate(self.bottom_offsets[j], phi);
            spine.push(s);
            top.push([s[0] + t[0], s[1] + t[1]]);
            bottom.push([s[0] + b[0], s[1] + b[1]]);
        }
        Kinematics { spine, top, bottom }
    }

    /// Polyline cable lengths through the displaced guides.
    pub fn geometric_lengths(&self, angles: &[f64]) -> (f64, f64) {
        let k = self.kinematics(angles);
        (polyline_length(&k.top), polyline_length(&k.bottom))
    }

    pub fn pose(&self, angles: Vec<f64>) -> TailPose {
        let midline = self.kinematics(&angles).spine;
        TailPose {
            segment_angles: angles,
            midline,
        }
    }

    /// Minimum-energy pose for `cmd`. `warm` seeds the continuation, which
    /// otherwise starts from the rest pose.
    pub fn solve(
        &self,
        cmd: &ActuationCommand,
        stiffnesses: &[f64],
        warm: Option<&[f64]>,
    ) -> Result<TailPose> {
        let n = self.n_joints();
        if stiffnesses.len() != n {
            return Err(Error::validation(format!(
                "{} stiffnesses for {n} joints",
                stiffnesses.len()
            )));
        }
        if stiffnesses.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::validation("stiffnesses must be positive"));
        }
        for (name, d, slack) in [
            ("top", cmd.delta_top, self.slack_top),
            ("bottom", cmd.delta_bottom, self.slack_bottom),
        ] {
            if !d.is_finite() || d.abs() > TRAVEL_LIMIT * slack {
                return Err(Error::validation(format!(
                    "{name} cable delta {d} m exceeds travel limit {:.6} m",
                    TRAVEL_LIMIT * slack
                )));
            }
        }

        let mut active = Vec::with_capacity(2);
        for (cable, d, slack) in [
            (Cable::Top, cmd.delta_top, self.slack_top),
            (Cable::Bottom, cmd.delta_bottom, self.slack_bottom),
        ] {
            if d > 0.0 {
                let target = slack - d;
                let min = self.min_cable_length(cable);
                if target < min {
                    return Err(Error::Infeasible(format!(
                        "{cable:?} cable cannot shorten to {target:.6} m, geometric minimum is {min:.6} m"
                    )));
                }
                active.push((cable, target));
            }
        }
        if active.is_empty() {
            return Ok(self.pose(vec![0.0; n]));
        }

        let mut theta = match warm {
            Some(w) if w.len() == n && w.iter().all(|a| a.abs() < HALF_PI) => w.to_vec(),
            _ => vec![0.0; n],
        };
        let mut lambda = vec![0.0; active.len()];
        let start: Vec<f64> = active.iter().map(|(c, _)| self.cable_length(*c, &theta)).collect();
        for step in 1..=CONTINUATION_STEPS {
            let frac = step as f64 / CONTINUATION_STEPS as f64;
            let targets: Vec<(Cable, f64)> = active
                .iter()
                .zip(&start)
                .map(|(&(c, t), &l0)| (c, l0 + frac * (t - l0)))
                .collect();
            self.newton(&targets, stiffnesses, &mut theta, &mut lambda)?;
        }
        let residual = active
            .iter()
            .map(|&(c, t)| (self.cable_length(c, &theta) - t).abs())
            .fold(0.0, f64::max);
        if residual > LENGTH_TOL {
            return Err(Error::NoConvergence {
                iterations: NEWTON_CAP,
                residual,
            });
        }
        Ok(self.pose(theta))
    }

    /// KKT residual: stationarity rows then constraint rows.
    fn kkt_residual(
        &self,
        targets: &[(Cable, f64)],
        k: &[f64],
        theta: &[f64],
        lambda: &[f64],
    ) -> Vec<f64> {
        let n = theta.len();
        let mut r = vec![0.0; n + targets.len()];
        for j in 0..n {
            r[j] = k[j] * theta[j];
        }
        for (ci, &(cable, target)) in targets.iter().enumerate() {
            let mut len = 0.0;
            for (j, span) in self.spans(cable).iter().enumerate() {
                let (f, df, _) = span.eval(theta[j]);
                r[j] += lambda[ci] * df;
                len += f;
            }
            r[n + ci] = len - target;
        }
        r
    }

    fn newton(
        &self,
        targets: &[(Cable, f64)],
        k: &[f64],
        theta: &mut [f64],
        lambda: &mut [f64],
    ) -> Result<()> {
        let n = theta.len();
        let m = targets.len();
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut r = self.kkt_residual(targets, k, theta, lambda);
        for _ in 0..NEWTON_CAP {
            let mut jac = DMatrix::<f64>::zeros(n + m, n + m);
            for j in 0..n {
                jac[(j, j)] = k[j];
            }
            for (ci, &(cable, _)) in targets.iter().enumerate() {
                for (j, span) in self.spans(cable).iter().enumerate() {
                    let (_, df, ddf) = span.eval(theta[j]);
                    jac[(j, j)] += lambda[ci] * ddf;
                    jac[(j, n + ci)] = df;
                    jac[(n + ci, j)] = df;
                }
            }
            let rhs = -DVector::from_column_slice(&r);
            let step = jac.lu().solve(&rhs).ok_or(Error::NoConvergence {
                iterations: 0,
                residual: norm(&r[n..]),
            })?;

            let current = norm(&r);
            let mut alpha = 1.0;
            let accepted = loop {
                let trial_t: Vec<f64> = (0..n).map(|j| theta[j] + alpha * step[j]).collect();
                let trial_l: Vec<f64> = (0..m).map(|c| lambda[c] + alpha * step[n + c]).collect();
                if trial_t.iter().all(|a| a.abs() < HALF_PI) {
                    let tr = self.kkt_residual(targets, k, &trial_t, &trial_l);
                    if norm(&tr) < current || current == 0.0 {
                        theta.copy_from_slice(&trial_t);
                        lambda.copy_from_slice(&trial_l);
                        r = tr;
                        break true;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-6 {
                    break false;
                }
            };
            let step_size = (0..n).fold(0.0f64, |a, j| a.max((alpha * step[j]).abs()));
            if !accepted || step_size < 1e-15 {
                break;
            }
        }
        let residual = norm(&r[n..]);
        if residual > LENGTH_TOL {
            return Err(Error::NoConvergence {
                iterations: NEWTON_CAP,
                residual,
            });
        }
        Ok(())
    }
}

/// Minimum-energy tail pose for a cable command.
pub fn bend_from_cables(
    graph: &SkeletonGraph,
    routing: &CableRouting,
    cmd: &ActuationCommand,
    stiffnesses: &[f64],
) -> Result<TailPose> {
    TendonModel::new(graph, routing)?.solve(cmd, stiffnesses, None)
}

/// Polyline lengths of (top, bottom) cables through the guides displaced by `pose`.
pub fn cable_lengths(
    graph: &SkeletonGraph,
    routing: &CableRouting,
    pose: &TailPose,
) -> Result<(f64, f64)> {
    let model = TendonModel::new(graph, routing)?;
    if pose.segment_angles.len() != model.n_joints() {
        return Err(Error::validation(format!(
            "pose has {} angles, skeleton has {} joints",
            pose.segment_angles.len(),
            model.n_joints()
        )));
    }
    Ok(model.geometric_lengths(&pose.segment_angles))
}
