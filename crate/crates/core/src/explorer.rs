//! Design-space sweeps, Pareto filtering and report emission.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energetics::{predict_power, PowerModel, SwimResult, DERIVED_MASS_KG};
use crate::hydro::{self, HydroParams, DEFAULT_SAMPLES};
use crate::profile::ProfileFit;
use crate::skeleton::{generate_skeleton, six_presets, SkeletonGraph, SkeletonSpec, PRESET_LABELS};
use crate::tendon::{self, route_cables, stiffnesses_from_graph, DEFAULT_K_REF};
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "label,h1,h2,thickness_ratio,n_ribs,speed_mm_s,speed_bl_s,power_w,mass_kg,cot,pareto,source";
pub const PLOT_HEADER: &str = "speed_mm_s,cot";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Actuation {
    pub amplitude_m: f64,
    pub frequency_hz: f64,
}

impl Default for Actuation {
    fn default() -> Self {
        Self {
            amplitude_m: tendon::DEFAULT_AMPLITUDE,
            frequency_hz: tendon::DEFAULT_FREQUENCY,
        }
    }
}

/// Everything besides the skeleton that determines a swim result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwimSettings {
    pub actuation: Actuation,
    pub hydro: HydroParams,
    pub power: PowerModel,
    /// Frequency at which the power model reaches its full-actuation figure.
    pub frequency_ref_hz: f64,
    pub mass_kg: f64,
    /// Bending stiffness of a 3 mm segment, N m/rad.
    pub k_ref: f64,
    pub n_samples: usize,
}

impl Default for SwimSettings {
    fn default() -> Self {
        Self {
            actuation: Actuation::default(),
            hydro: HydroParams::default(),
            power: PowerModel::default(),
            frequency_ref_hz: tendon::DEFAULT_FREQUENCY,
            mass_kg: DERIVED_MASS_KG,
            k_ref: DEFAULT_K_REF,
            n_samples: DEFAULT_SAMPLES,
        }
    }
}

impl SwimSettings {
    pub fn validate(&self) -> Result<()> {
        self.hydro.validate()?;
        self.power.validate()?;
        if !(self.mass_kg > 0.0) || !(self.k_ref > 0.0) || !(self.frequency_ref_hz > 0.0) {
            return Err(Error::validation("mass, k_ref and frequency_ref must be positive"));
        }
        Ok(())
    }
}

fn history(graph: &SkeletonGraph, settings: &SwimSettings) -> Result<hydro::MidlineHistory> {
    let routing = route_cables(graph)?;
    let k = stiffnesses_from_graph(graph, settings.k_ref);
    hydro::sample_kinematics(
        graph,
        &routing,
        &k,
        settings.actuation.amplitude_m,
        settings.actuation.frequency_hz,
        settings.n_samples,
    )
}

/// Steady speed, predicted power and COT of one skeleton.
pub fn simulate(graph: &SkeletonGraph, settings: &SwimSettings) -> Result<SwimResult> {
    settings.validate()?;
    let speed = hydro::steady_speed_from_history(&history(graph, settings)?, &settings.hydro)?;
    let a = settings.actuation;
    let power = predict_power(&settings.power, a.amplitude_m, a.frequency_hz, settings.frequency_ref_hz);
    SwimResult::new(speed, power, settings.mass_kg, graph.body_length())
}

/// Returns settings whose drag coefficient makes `graph` swim at `target_speed`.
pub fn calibrate_settings(
    graph: &SkeletonGraph,
    settings: &SwimSettings,
    target_speed: f64,
) -> Result<SwimSettings> {
    settings.validate()?;
    let hydro = hydro::calibrate_history(&history(graph, settings)?, &settings.hydro, target_speed)?;
    Ok(SwimSettings { hydro, ..*settings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignGrid {
    pub h1_h2_values: Vec<(f64, f64)>,
    pub thickness_ratios: Vec<f64>,
    pub n_ribs_values: Vec<usize>,
    #[serde(default)]
    pub base_spec: SkeletonSpec,
    #[serde(default, flatten)]
    pub settings: SwimSettings,
    /// Calibrate drag on `base_spec` to this speed before sweeping.
    #[serde(default, rename = "calibrate_speed_m_s")]
    pub calibrate_speed: Option<f64>,
}

impl DesignGrid {
    /// The two h1:h2 ratios by three thickness ratios of the preset family.
    pub fn presets() -> Self {
        Self {
            h1_h2_values: vec![(1.0, 1.0), (1.0, 2.0)],
            thickness_ratios: vec![1.0, 2.0, 3.0],
            n_ribs_values: vec![crate::skeleton::DEFAULT_N_RIBS],
            base_spec: SkeletonSpec::with_ratios(1.0, 2.0, 1.0),
            settings: SwimSettings::default(),
            calibrate_speed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.h1_h2_values.is_empty() || self.thickness_ratios.is_empty() || self.n_ribs_values.is_empty() {
            return Err(Error::validation("grid value lists must be non-empty"));
        }
        self.settings.validate()?;
        let labels: BTreeSet<String> = self.points().iter().map(design_label).collect();
        if labels.len() != self.len() {
            return Err(Error::validation("grid contains repeated design points"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.h1_h2_values.len() * self.thickness_ratios.len() * self.n_ribs_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<SkeletonSpec> {
        let mut out = Vec::with_capacity(self.len());
        for &h1_h2 in &self.h1_h2_values {
            for &thickness_ratio in &self.thickness_ratios {
                for &n_ribs in &self.n_ribs_values {
                    out.push(SkeletonSpec {
                        h1_h2,
                        thickness_ratio,
                        n_ribs,
                        ..self.base_spec
                    });
                }
            }
        }
        out
    }
}

/// `typeN` for an exact preset, otherwise the parameters spelled out.
pub fn design_label(spec: &SkeletonSpec) -> String {
    let preset = six_presets()
        .into_iter()
        .zip(PRESET_LABELS)
        .find(|(p, _)| p == spec)
        .map(|(_, l)| l.to_string());
    preset.unwrap_or_else(|| {
        format!(
            "h{}-{}_t{}_r{}",
            spec.h1_h2.0, spec.h1_h2.1, spec.thickness_ratio, spec.n_ribs
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Simulated,
    PaperReference,
}

impl Source {
    fn as_str(self) -> &'static str {
        match self {
            Source::Simulated => "simulated",
            Source::PaperReference => "paper-reference",
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulated" => Ok(Source::Simulated),
            "paper-reference" => Ok(Source::PaperReference),
            other => Err(Error::validation(format!("unknown source `{other}`"))),
        }
    }
}

/// One grid point. Exactly one of `result` and `error` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRecord {
    pub label: String,
    pub spec: SkeletonSpec,
    pub result: Option<SwimResult>,
    pub error: Option<String>,
    pub source: Source,
}

impl DesignRecord {
    /// (speed, COT) when the record can take part in Pareto analysis.
    fn metrics(&self) -> Option<(f64, f64)> {
        let r = self.result?;
        Some((r.speed, r.cot?))
    }
}

fn evaluate(spec: &SkeletonSpec, curves: &ProfileFit, settings: &SwimSettings) -> Result<SwimResult> {
    let graph = generate_skeleton(spec, &curves.upper, &curves.lower)?;
    simulate(&graph, settings)
}

/// Evaluates every grid point on a pool of `jobs` threads (all cores when
/// `None`). Failed points become error records.
pub fn run_sweep(grid: &DesignGrid, curves: &ProfileFit, jobs: Option<usize>) -> Result<Vec<DesignRecord>> {
    grid.validate()?;
    let settings = match grid.calibrate_speed {
        Some(target) => {
            let graph = generate_skeleton(&grid.base_spec, &curves.upper, &curves.lower)?;
            calibrate_settings(&graph, &grid.settings, target)?
        }
        None => grid.settings,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    let points = grid.points();
    let mut records: Vec<DesignRecord> = pool.install(|| {
        points
            .par_iter()
            .map(|spec| {
                let outcome = evaluate(spec, curves, &settings);
                DesignRecord {
                    label: design_label(spec),
                    spec: *spec,
                    result: outcome.as_ref().ok().copied(),
                    error: outcome.err().map(|e| e.to_string()),
                    source: Source::Simulated,
                }
            })
            .collect()
    });
    records.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(records)
}

/// Membership of each record in the speed/COT non-dominated set.
pub fn pareto_mask(records: &[DesignRecord]) -> Vec<bool> {
    let metrics: Vec<Option<(f64, f64)>> = records.iter().map(DesignRecord::metrics).collect();
    metrics
        .iter()
        .map(|m| {
            let Some((v, c)) = *m else { return false };
            !metrics.iter().flatten().any(|&(v2, c2)| v2 >= v && c2 <= c && (v2 > v || c2 < c))
        })
        .collect()
}

pub fn dominates(a: &DesignRecord, b: &DesignRecord) -> bool {
    match (a.metrics(), b.metrics()) {
        (Some((v1, c1)), Some((v2, c2))) => v1 >= v2 && c1 <= c2 && (v1 > v2 || c1 < c2),
        _ => false,
    }
}

/// Non-dominated records, fastest first (ties broken by label).
pub fn pareto_front(records: &[DesignRecord]) -> Vec<DesignRecord> {
    let mut front: Vec<DesignRecord> = records
        .iter()
        .zip(pareto_mask(records))
        .filter(|&(_, keep)| keep)
        .map(|(r, _)| r.clone())
        .collect();
    front.sort_by(|a, b| {
        let (va, vb) = (a.metrics().unwrap().0, b.metrics().unwrap().0);
        vb.total_cmp(&va).then_with(|| a.label.cmp(&b.label))
    });
    front
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// Flat report row; the JSON form also carries the full spec, result and
/// error so it parses back into identical records.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportRow {
    label: String,
    h1: f64,
    h2: f64,
    thickness_ratio: f64,
    n_ribs: usize,
    speed_mm_s: Option<f64>,
    speed_bl_s: Option<f64>,
    power_w: Option<f64>,
    mass_kg: Option<f64>,
    cot: Option<f64>,
    pareto: bool,
    source: Source,
    spec: SkeletonSpec,
    result: Option<SwimResult>,
    error: Option<String>,
}

impl ReportRow {
    fn new(r: &DesignRecord, pareto: bool) -> Self {
        Self {
            label: r.label.clone(),
            h1: r.spec.h1_h2.0,
            h2: r.spec.h1_h2.1,
            thickness_ratio: r.spec.thickness_ratio,
            n_ribs: r.spec.n_ribs,
            speed_mm_s: r.result.map(|s| s.speed * 1000.0),
            speed_bl_s: r.result.map(|s| s.speed_bl),
            power_w: r.result.map(|s| s.power),
            mass_kg: r.result.map(|s| s.mass),
            cot: r.result.and_then(|s| s.cot),
            pareto,
            source: r.source,
            spec: r.spec,
            result: r.result,
            error: r.error.clone(),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn emit_report(records: &[DesignRecord], format: ReportFormat) -> Result<String> {
    if records.is_empty() {
        return Err(Error::validation("no records to report"));
    }
    let mask = pareto_mask(records);
    let rows: Vec<ReportRow> = records.iter().zip(mask).map(|(r, p)| ReportRow::new(r, p)).collect();
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(&rows).expect("report rows serialize");
            text.push('\n');
            Ok(text)
        }
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for row in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    row.label,
                    row.h1,
                    row.h2,
                    row.thickness_ratio,
                    row.n_ribs,
                    cell(row.speed_mm_s),
                    cell(row.speed_bl_s),
                    cell(row.power_w),
                    cell(row.mass_kg),
                    cell(row.cot),
                    row.pareto,
                    row.source.as_str()
                );
            }
            Ok(out)
        }
    }
}

pub fn parse_report_json(text: &str) -> Result<Vec<DesignRecord>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let rows: Vec<ReportRow> = serde_path_to_error::deserialize(de).map_err(|e| Error::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    Ok(rows
        .into_iter()
        .map(|r| DesignRecord {
            label: r.label,
            spec: r.spec,
            result: r.result,
            error: r.error,
            source: r.source,
        })
        .collect())
}

/// Reads a CSV report. Columns outside the header (spec details beyond the
/// swept axes, error reasons) come back at their defaults.
pub fn parse_report_csv(text: &str) -> Result<Vec<DesignRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(CSV_HEADER.split(',')) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{CSV_HEADER}`"),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or_default();
        let num = |i: usize| -> Result<Option<f64>> {
            let raw = field(i);
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse().map(Some).map_err(|_| Error::Parse {
                line,
                message: format!("`{raw}` is not a number"),
            })
        };
        let need = |i: usize| -> Result<f64> {
            num(i)?.ok_or_else(|| Error::Parse {
                line,
                message: format!("column {i} is empty"),
            })
        };
        let n_ribs = field(4).parse().map_err(|_| Error::Parse {
            line,
            message: format!("`{}` is not a rib count", field(4)),
        })?;
        let spec = SkeletonSpec {
            h1_h2: (need(1)?, need(2)?),
            thickness_ratio: need(3)?,
            n_ribs,
            ..SkeletonSpec::default()
        };
        let source: Source = field(11).parse().map_err(|e: Error| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let result = match (num(5)?, num(6)?, num(7)?, num(8)?) {
            (Some(mm), Some(bl), Some(power), Some(mass)) => {
                let speed = mm / 1000.0;
                Some(SwimResult {
                    speed,
                    speed_bl: bl,
                    power,
                    mass,
                    cot: num(9)?,
                    body_length: if bl > 0.0 { speed / bl } else { spec.body_length },
                })
            }
            _ => None,
        };
        out.push(DesignRecord {
            label: field(0).to_string(),
            error: result.is_none().then(|| "no result in report".to_string()),
            spec,
            result,
            source,
        });
    }
    Ok(out)
}

/// Scatter coordinates for a speed/COT chart; error records are skipped.
pub fn plot_data(records: &[DesignRecord]) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for r in records {
        if let Some((v, c)) = r.metrics() {
            let _ = writeln!(out, "{},{}", v * 1000.0, c);
        }
    }
    out
}

/// The six measured reference designs: speed in mm/s, speed in bl/s, COT.
const MEASURED_ROWS: [(f64, f64, f64); 6] = [
    (133.5607, 0.411, 146.0),
    (125.4027, 0.386, 136.0),
    (127.8671, 0.393, 136.0),
    (163.1813, 0.502, 95.0),
    (86.8601, 0.267, 175.0),
    (78.7879, 0.243, 193.0),
];

/// Measured results of the six preset skeletons.
///
/// Mass is the derived default and power is back-computed as COT * m * v,
/// so both are derived rather than measured. Each row's body length is
/// speed / (bl/s), which keeps the printed bl/s exact.
pub fn table1_reference() -> Vec<DesignRecord> {
    six_presets()
        .into_iter()
        .zip(PRESET_LABELS)
        .zip(MEASURED_ROWS)
        .map(|((spec, label), (mm_s, bl_s, cot))| {
            let speed = mm_s / 1000.0;
            DesignRecord {
                label: label.to_string(),
                spec,
                result: Some(SwimResult {
                    speed,
                    speed_bl: bl_s,
                    power: cot * DERIVED_MASS_KG * speed,
                    mass: DERIVED_MASS_KG,
                    cot: Some(cot),
                    body_length: speed / bl_s,
                }),
                error: None,
                source: Source::PaperReference,
            }
        })
        .collect()
}
