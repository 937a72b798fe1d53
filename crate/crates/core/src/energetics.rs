//! Cost of transport, power and runtime arithmetic, and the readers for
//! measured power and position logs.
//!
//! COT here is `P / (m v)` in W/(kg m/s), without the gravitational
//! normalization of the usual dimensionless definition. That is the
//! convention under which the reference robot's published figures close.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const IDLE_POWER_W: f64 = 0.48;
/// Power draw of the reference robot under full (Type 4) actuation.
pub const FULL_POWER_W: f64 = 9.33;
pub const BATTERY_WH: f64 = 1.85;
/// Robot mass, derived from the Type 4 power, speed and COT triple
/// (m = P / (COT v)); never measured directly.
pub const DERIVED_MASS_KG: f64 = 0.6022;

pub fn cot(power: f64, mass: f64, speed: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    if speed == 0.0 || !speed.is_finite() {
        return Err(Error::Domain(format!("COT undefined at speed {speed}")));
    }
    Ok(power / (mass * speed))
}

/// Speed in body lengths per second.
pub fn speed_bl(speed: f64, body_length: f64) -> Result<f64> {
    if !(body_length > 0.0) {
        return Err(Error::Domain(format!(
            "body length must be positive, got {body_length}"
        )));
    }
    Ok(speed / body_length)
}

pub fn runtime_hours(battery_wh: f64, power_w: f64) -> Result<f64> {
    if !(power_w > 0.0) {
        return Err(Error::Domain(format!("power must be positive, got {power_w}")));
    }
    Ok(battery_wh / power_w)
}

/// Power draw interpolated between the idle floor and the full-actuation
/// figure: `P = p_idle + (p_full - p_idle) (A / A_ref)^exponent (f / f_ref)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerModel {
    #[serde(rename = "p_idle_w")]
    pub p_idle: f64,
    #[serde(rename = "p_actuation_full_w")]
    pub p_actuation_full: f64,
    #[serde(rename = "amplitude_ref_m")]
    pub amplitude_ref: f64,
    pub exponent: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_idle: IDLE_POWER_W,
            p_actuation_full: FULL_POWER_W,
            amplitude_ref: crate::tendon::DEFAULT_AMPLITUDE,
            exponent: 2.0,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_idle >= 0.0) || !(self.p_actuation_full > self.p_idle) {
            return Err(Error::validation(format!(
                "need 0 <= p_idle < p_full, got {} and {}",
                self.p_idle, self.p_actuation_full
            )));
        }
        if !(self.amplitude_ref > 0.0) {
            return Err(Error::validation("reference amplitude must be positive"));
        }
        Ok(())
    }
}

pub fn predict_power(model: &PowerModel, amplitude: f64, frequency: f64, f_ref: f64) -> f64 {
    let span = model.p_actuation_full - model.p_idle;
    model.p_idle + span * (amplitude / model.amplitude_ref).powf(model.exponent) * (frequency / f_ref)
}

/// One evaluated swim: speeds, power, mass and the resulting COT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwimResult {
    #[serde(rename = "speed_m_s")]
    pub speed: f64,
    #[serde(rename = "speed_bl_s")]
    pub speed_bl: f64,
    #[serde(rename = "power_w")]
    pub power: f64,
    #[serde(rename = "mass_kg")]
    pub mass: f64,
    /// None when the robot does not move.
    pub cot: Option<f64>,
    #[serde(rename = "body_length_m")]
    pub body_length: f64,
}

impl SwimResult {
    pub fn new(speed: f64, power: f64, mass: f64, body_length: f64) -> Result<Self> {
        if !(speed >= 0.0) {
            return Err(Error::validation(format!("speed must be non-negative, got {speed}")));
        }
        Ok(Self {
            speed,
            speed_bl: speed_bl(speed, body_length)?,
            power,
            mass,
            cot: if speed > 0.0 { Some(cot(power, mass, speed)?) } else { None },
            body_length,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectricalSample {
    pub t: f64,
    pub voltage: f64,
    pub current: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t: f64,
    pub x: f64,
}

/// Power and position logs of one swimming trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementLog {
    pub samples: Vec<ElectricalSample>,
    pub track: Vec<TrackPoint>,
}

fn check_times(times: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let times: Vec<f64> = times.collect();
    if times.len() < 2 {
        return Err(Error::validation(format!(
            "{what} has {} samples, need at least 2",
            times.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation(format!("{what} times are not increasing")));
    }
    Ok(())
}

/// Time-weighted mean of V*I, trapezoidal rule.
pub fn average_power(log: &MeasurementLog) -> Result<f64> {
    check_times(log.samples.iter().map(|s| s.t), "power log")?;
    let p = |s: &ElectricalSample| s.voltage * s.current;
    let energy: f64 = log
        .samples
        .windows(2)
        .map(|w| 0.5 * (p(&w[0]) + p(&w[1])) * (w[1].t - w[0].t))
        .sum();
    let span = log.samples[log.samples.len() - 1].t - log.samples[0].t;
    Ok(energy / span)
}

/// Net displacement over elapsed time. Backward motion gives a negative speed.
pub fn speed_from_track(log: &MeasurementLog) -> Result<f64> {
    if log.track.len() < 2 {
        return Err(Error::validation(format!(
            "track has {} points, need at least 2",
            log.track.len()
        )));
    }
    let (first, last) = (log.track[0], log.track[log.track.len() - 1]);
    let elapsed = last.t - first.t;
    if elapsed == 0.0 {
        return Err(Error::validation("track has zero elapsed time"));
    }
    check_times(log.track.iter().map(|p| p.t), "track")?;
    Ok((last.x - first.x) / elapsed)
}

fn read_rows<R: Read, const N: usize>(source: R, header: [&str; N]) -> Result<Vec<[f64; N]>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let found = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if found.iter().ne(header) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut row = [0.0; N];
        for (i, slot) in row.iter_mut().enumerate() {
            let raw = record.get(i).unwrap_or_default();
            *slot = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("`{raw}` is not a number in column {}", header[i]),
            })?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads an electrical log with header `t_s,voltage_v,current_a`.
pub fn load_power_log<R: Read>(source: R) -> Result<Vec<ElectricalSample>> {
    Ok(read_rows(source, ["t_s", "voltage_v", "current_a"])?
        .into_iter()
        .map(|[t, voltage, current]| ElectricalSample { t, voltage, current })
        .collect())
}

/// Reads a position track with header `t_s,x_m`.
pub fn load_track<R: Read>(source: R) -> Result<Vec<TrackPoint>> {
    Ok(read_rows(source, ["t_s", "x_m"])?
        .into_iter()
        .map(|[t, x]| TrackPoint { t, x })
        .collect())
}
