//! Steady swimming speed from tail kinematics.
//!
//! Mean thrust follows the elongated-body estimate evaluated at the trailing
//! edge,
//!
//! ```text
//! T = m_a / 2 * < hdot^2 - U^2 h'^2 >,   m_a = rho * pi * s^2 / 4 * c_a
//! ```
//!
//! where `h` is the trailing edge's lateral excursion about its time-mean
//! position, `s` the fluke span and `c_a` an added-mass coefficient. Drag is
//! `1/2 rho C_d A U^2`. The steady speed is the root of thrust minus drag.

use serde::{Deserialize, Serialize};

use crate::skeleton::SkeletonGraph;
use crate::tendon::{actuation_waveform, CableRouting, TendonModel};
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 64;
pub const MIN_SAMPLES: usize = 16;
/// Upper end of the speed bracket, m/s.
pub const U_MAX: f64 = 2.0;
/// Thrust/drag balance required at the steady speed, N.
pub const FORCE_TOL: f64 = 1e-6;
/// Relative speed match required by [`calibrate`].
pub const CALIBRATION_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HydroParams {
    #[serde(rename = "rho_kg_m3")]
    pub rho: f64,
    pub drag_coeff: f64,
    #[serde(rename = "frontal_area_m2")]
    pub frontal_area: f64,
    pub added_mass_coeff: f64,
    #[serde(rename = "tip_span_m")]
    pub tip_span: f64,
}

impl Default for HydroParams {
    fn default() -> Self {
        Self {
            rho: 1000.0,
            drag_coeff: 0.5,
            frontal_area: 0.003,
            added_mass_coeff: 1.0,
            tip_span: 0.08,
        }
    }
}

impl HydroParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho", self.rho),
            ("drag_coeff", self.drag_coeff),
            ("frontal_area", self.frontal_area),
            ("added_mass_coeff", self.added_mass_coeff),
            ("tip_span", self.tip_span),
        ];
        match fields.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
            Some((name, v)) => Err(Error::validation(format!("{name} must be positive, got {v}"))),
            None => Ok(()),
        }
    }

    /// Added mass per unit length at the trailing edge, kg/m.
    pub fn added_mass(&self) -> f64 {
        self.rho * std::f64::consts::PI * self.tip_span * self.tip_span / 4.0 * self.added_mass_coeff
    }
}

/// Midlines sampled at uniform times over one actuation period.
#[derive(Debug, Clone, PartialEq)]
pub struct MidlineHistory {
    times: Vec<f64>,
    midlines: Vec<Vec<[f64; 2]>>,
    period: f64,
}

impl MidlineHistory {
    pub fn new(times: Vec<f64>, midlines: Vec<Vec<[f64; 2]>>, period: f64) -> Result<Self> {
        if times.len() != midlines.len() {
            return Err(Error::validation("one midline per time sample required"));
        }
        if times.len() < MIN_SAMPLES {
            return Err(Error::validation(format!(
                "{} samples per period, need at least {MIN_SAMPLES}",
                times.len()
            )));
        }
        let dt = period / times.len() as f64;
        let uniform = times
            .iter()
            .enumerate()
            .all(|(i, t)| (t - i as f64 * dt).abs() <= 1e-9 * period);
        if !(period > 0.0) || !uniform {
            return Err(Error::validation("time samples must be uniform over one period"));
        }
        let stations = midlines[0].len();
        if stations < 2 || midlines.iter().any(|m| m.len() != stations) {
            return Err(Error::validation("every midline needs the same stations (at least 2)"));
        }
        Ok(Self {
            times,
            midlines,
            period,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn midlines(&self) -> &[Vec<[f64; 2]>] {
        &self.midlines
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Period means of hdot^2 and h'^2 at the trailing edge.
    fn trailing_edge_moments(&self) -> (f64, f64) {
        let n = self.times.len();
        let dt = self.period / n as f64;
        let last = self.midlines[0].len() - 1;
        let mean = |idx: usize| self.midlines.iter().map(|m| m[idx][1]).sum::<f64>() / n as f64;
        let (ref_te, ref_prev) = (mean(last), mean(last - 1));
        let excursion = |i: usize| self.midlines[i][last][1] - ref_te;

        let mut hdot2 = 0.0;
        let mut slope2 = 0.0;
        for i in 0..n {
            // periodic central difference in time
            let hdot = (excursion((i + 1) % n) - excursion((i + n - 1) % n)) / (2.0 * dt);
            let m = &self.midlines[i];
            let dh = (m[last][1] - ref_te) - (m[last - 1][1] - ref_prev);
            let slope = dh / (m[last][0] - m[last - 1][0]);
            hdot2 += hdot * hdot;
            slope2 += slope * slope;
        }
        (hdot2 / n as f64, slope2 / n as f64)
    }
}

/// Runs the tendon solver at `n_samples` uniform phases of one period.
pub fn sample_kinematics(
    graph: &SkeletonGraph,
    routing: &CableRouting,
    stiffnesses: &[f64],
    amplitude: f64,
    frequency: f64,
    n_samples: usize,
) -> Result<MidlineHistory> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::validation(format!(
            "{n_samples} samples per period, need at least {MIN_SAMPLES}"
        )));
    }
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(Error::validation(format!("frequency must be positive, got {frequency}")));
    }
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::validation(format!("amplitude must be non-negative, got {amplitude}")));
    }
    let model = TendonModel::new(graph, routing)?;
    let period = 1.0 / frequency;
    let mut times = Vec::with_capacity(n_samples);
    let mut midlines = Vec::with_capacity(n_samples);
    let mut warm: Option<Vec<f64>> = None;
    for i in 0..n_samples {
        let t = i as f64 * period / n_samples as f64;
        let cmd = actuation_waveform(amplitude, frequency, t);
        let pose = model.solve(&cmd, stiffnesses, warm.as_deref())?;
        warm = Some(pose.segment_angles().to_vec());
        times.push(t);
        midlines.push(pose.midline().to_vec());
    }
    MidlineHistory::new(times, midlines, period)
}

/// Period-averaged trailing-edge thrust at forward speed `u`, N.
pub fn mean_thrust(history: &MidlineHistory, u: f64, params: &HydroParams) -> Result<f64> {
    if history.times.len() < 3 {
        return Err(Error::validation("thrust needs at least 3 time samples"));
    }
    if !(u >= 0.0) {
        return Err(Error::validation(format!("speed must be non-negative, got {u}")));
    }
    let (hdot2, slope2) = history.trailing_edge_moments();
    Ok(thrust_from_moments(hdot2, slope2, u, params))
}

fn thrust_from_moments(hdot2: f64, slope2: f64, u: f64, params: &HydroParams) -> f64 {
    0.5 * params.added_mass() * (hdot2 - u * u * slope2)
}

/// Quadratic body drag, N.
pub fn drag_force(u: f64, params: &HydroParams) -> f64 {
    0.5 * params.rho * params.drag_coeff * params.frontal_area * u * u
}

/// Speed at which mean thrust balances drag for a sampled history.
pub fn steady_speed_from_history(history: &MidlineHistory, params: &HydroParams) -> Result<f64> {
    params.validate()?;
    let (hdot2, slope2) = history.trailing_edge_moments();
    let net = |u: f64| thrust_from_moments(hdot2, slope2, u, params) - drag_force(u, params);
    if net(0.0) <= 0.0 {
        return Ok(0.0);
    }
    // expand until the net force turns negative
    let (mut lo, mut hi) = (0.0, 0.01);
    while net(hi) > 0.0 {
        if hi >= U_MAX {
            return Err(Error::NoBracket { u_max: U_MAX });
        }
        lo = hi;
        hi = (2.0 * hi).min(U_MAX);
    }
    Ok(illinois(net, lo, hi))
}

/// Regula falsi with the Illinois modification on a sign-changing bracket.
fn illinois(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let (mut fa, mut fb) = (f(a), f(b));
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() < 1e-15 * b.abs().max(1e-12) {
            return c;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fc.abs() < 1e-14 {
            return c;
        }
    }
    0.5 * (a + b)
}

/// Steady speed for a design under the antagonistic sinusoidal waveform.
pub fn steady_speed(
    graph: &SkeletonGraph,
    routing: &CableRouting,
    stiffnesses: &[f64],
    amplitude: f64,
    frequency: f64,
    params: &HydroParams,
) -> Result<f64> {
    params.validate()?;
    let history = sample_kinematics(graph, routing, stiffnesses, amplitude, frequency, DEFAULT_SAMPLES)?;
    steady_speed_from_history(&history, params)
}

/// Rescales the drag coefficient so the design swims at `target_speed`.
///
/// Secant iteration on log(drag_coeff), which keeps the coefficient positive.
pub fn calibrate(
    graph: &SkeletonGraph,
    routing: &CableRouting,
    stiffnesses: &[f64],
    amplitude: f64,
    frequency: f64,
    params: &HydroParams,
    target_speed: f64,
) -> Result<HydroParams> {
    let history = sample_kinematics(graph, routing, stiffnesses, amplitude, frequency, DEFAULT_SAMPLES)?;
    calibrate_history(&history, params, target_speed)
}

pub fn calibrate_history(
    history: &MidlineHistory,
    params: &HydroParams,
    target_speed: f64,
) -> Result<HydroParams> {
    params.validate()?;
    if !(target_speed > 0.0) || !target_speed.is_finite() {
        return Err(Error::validation(format!(
            "target speed must be positive, got {target_speed}"
        )));
    }
    let (hdot2, slope2) = history.trailing_edge_moments();
    if hdot2 <= 0.0 {
        return Err(Error::Unreachable("the tail produces no thrust".into()));
    }
    if slope2 > 0.0 && target_speed * target_speed >= hdot2 / slope2 {
        return Err(Error::Unreachable(format!(
            "{target_speed} m/s needs zero drag or less (thrust vanishes at {:.6} m/s)",
            (hdot2 / slope2).sqrt()
        )));
    }
    let speed_at = |log_cd: f64| -> Result<f64> {
        let p = HydroParams {
            drag_coeff: log_cd.exp(),
            ..*params
        };
        steady_speed_from_history(history, &p)
    };
    let mut x0 = params.drag_coeff.ln();
    let mut x1 = x0 + 0.1;
    let mut g0 = speed_at(x0)? - target_speed;
    let mut g1 = speed_at(x1)? - target_speed;
    for _ in 0..100 {
        if g1.abs() <= 1e-10 * target_speed {
            break;
        }
        if g1 == g0 {
            break;
        }
        let x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        // keep steps bounded so a flat stretch cannot throw the iterate away
        let x2 = x2.clamp(x1 - 3.0, x1 + 3.0);
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = speed_at(x1)? - target_speed;
    }
    if g1.abs() > CALIBRATION_TOL * target_speed {
        return Err(Error::Unreachable(format!(
            "calibration stalled {:.3e} m/s from the target",
            g1
        )));
    }
    Ok(HydroParams {
        drag_coeff: x1.exp(),
        ..*params
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history(ys: impl Fn(usize) -> [f64; 2], n: usize) -> MidlineHistory {
        let period = 1.0;
        let times = (0..n).map(|i| i as f64 / n as f64).collect();
        let mids = (0..n).map(|i| vec![[0.0, 0.0], [0.1, ys(i)[0]], [0.2, ys(i)[1]]]).collect();
        MidlineHistory::new(times, mids, period).unwrap()
    }

    #[test]
    fn drag_examples() {
        let p = HydroParams::default();
        assert_eq!(drag_force(0.0, &p), 0.0);
        assert!((drag_force(0.2, &p) / drag_force(0.1, &p) - 4.0).abs() < 1e-12);
        let d = drag_force(0.1632, &p);
        assert!((d - 0.5 * 1000.0 * 0.5 * 0.003 * 0.1632 * 0.1632).abs() < 1e-15);
        assert!((d - 0.01998).abs() < 1e-5);
    }

    #[test]
    fn static_midline_only_drags() {
        let h = history(|_| [0.01, 0.03], 16);
        let p = HydroParams::default();
        assert_eq!(mean_thrust(&h, 0.0, &p).unwrap(), 0.0);
        assert!(mean_thrust(&h, 0.3, &p).unwrap() <= 0.0);
        assert_eq!(steady_speed_from_history(&h, &p).unwrap(), 0.0);
    }

    #[test]
    fn moving_tail_thrust_nonnegative_at_rest() {
        let h = history(
            |i| {
                let s = (2.0 * std::f64::consts::PI * i as f64 / 32.0).sin();
                [0.005 * s, 0.02 * s]
            },
            32,
        );
        assert!(mean_thrust(&h, 0.0, &HydroParams::default()).unwrap() > 0.0);
    }

    #[test]
    fn history_validation() {
        assert!(MidlineHistory::new(vec![0.0; 4], vec![vec![[0.0, 0.0]; 2]; 4], 1.0).is_err());
        let times: Vec<f64> = (0..16).map(|i| (i as f64 / 16.0).powi(2)).collect();
        assert!(MidlineHistory::new(times, vec![vec![[0.0, 0.0]; 2]; 16], 1.0).is_err());
    }

    #[test]
    fn params_must_be_positive() {
        let p = HydroParams {
            tip_span: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let json = serde_json::to_string(&HydroParams::default()).unwrap();
        assert_eq!(
            json,
            r#"{"rho_kg_m3":1000.0,"drag_coeff":0.5,"frontal_area_m2":0.003,"added_mass_coeff":1.0,"tip_span_m":0.08}"#
        );
    }
}
