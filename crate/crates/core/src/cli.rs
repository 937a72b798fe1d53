//! The `dolphin-tail` command.
//!
//! Exit codes: 0 on success, 1 for bad input (usage, files, values), 2 when a
//! computation fails. Settings resolve as flag, then `--config` file, then
//! built-in default.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::energetics::{self, MeasurementLog, BATTERY_WH, DERIVED_MASS_KG};
use crate::explorer::{self, DesignGrid, ReportFormat, SwimSettings};
use crate::export;
use crate::hydro::HydroParams;
use crate::profile::{self, FitOptions, ProfileFit};
use crate::skeleton::{self, generate_skeleton, SkeletonGraph, SkeletonSpec};
use crate::tendon::{self, bend_from_cables, route_cables, stiffnesses_from_graph, ActuationCommand};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "dolphin-tail", version, about = "Design and simulate cable-driven fish-bone dolphin tails")]
pub struct Cli {
    /// Key-value TOML file overriding built-in defaults
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit degree-N polynomials to a body profile
    Fit(FitArgs),
    /// Generate a skeleton graph from a preset or explicit parameters
    Skeleton(SkeletonArgs),
    /// Solve the tail pose for a pair of cable displacements
    Bend(BendArgs),
    /// Simulate steady swimming and print the result as JSON
    Swim(SwimArgs),
    /// Evaluate a grid of designs and write a report
    Sweep(SweepArgs),
    /// Keep only the speed/COT non-dominated rows of a report
    Pareto(ParetoArgs),
    /// Draw a skeleton as SVG
    Export(ExportArgs),
    /// Average power, speed and COT from measured logs
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Profile CSV (x_m,y_upper_m,y_lower_m); the bundled profile if omitted
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// Dorsal-fin window as LO:HI in normalized chord, or `none`
    #[arg(long, value_name = "LO:HI")]
    pub excise: Option<String>,
    /// Points inserted into the excised gap
    #[arg(long)]
    pub fill: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SkeletonArgs {
    /// type1 .. type6
    #[arg(long, conflicts_with_all = ["h1h2", "thickness_ratio", "ribs"])]
    pub preset: Option<String>,
    /// Rib height ratio above:below the spine, e.g. 1:2
    #[arg(long, value_name = "H1:H2")]
    pub h1h2: Option<String>,
    /// First-rib to last-rib thickness
    #[arg(long)]
    pub thickness_ratio: Option<f64>,
    #[arg(long)]
    pub ribs: Option<usize>,
    /// Body length in metres
    #[arg(long)]
    pub body_length: Option<f64>,
    /// Fit JSON from `fit`; the bundled reference fit if omitted
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BendArgs {
    #[arg(long)]
    pub skeleton: PathBuf,
    /// Top cable pull in metres (negative releases)
    #[arg(long, allow_hyphen_values = true)]
    pub delta_top: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_bottom: f64,
    /// Bending stiffness of a 3 mm segment, N m/rad
    #[arg(long)]
    pub k_ref: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SwimArgs {
    #[arg(long)]
    pub skeleton: PathBuf,
    /// Cable stroke amplitude in metres
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Flapping frequency in Hz
    #[arg(long)]
    pub freq: Option<f64>,
    /// Fit the drag coefficient so this skeleton swims at the given speed
    #[arg(long, value_name = "M_S")]
    pub calibrate_speed: Option<f64>,
    /// Hydrodynamic parameters JSON
    #[arg(long)]
    pub hydro: Option<PathBuf>,
    /// Write the (possibly calibrated) hydrodynamic parameters here
    #[arg(long)]
    pub hydro_out: Option<PathBuf>,
    #[arg(long)]
    pub mass: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Design grid JSON
    #[arg(long, required_unless_present = "reference", conflicts_with = "reference")]
    pub grid: Option<PathBuf>,
    /// Report the six bundled measured designs instead of simulating
    #[arg(long)]
    pub reference: bool,
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Format of --out: csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Also write the JSON report here
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Also write speed/COT scatter data here
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Worker threads; all cores if omitted
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    /// CSV report from `sweep`
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub skeleton: PathBuf,
    #[arg(long)]
    pub svg: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with t_s,voltage_v,current_a
    #[arg(long)]
    pub power_log: PathBuf,
    /// CSV with t_s,x_m
    #[arg(long)]
    pub track: PathBuf,
    #[arg(long)]
    pub mass: Option<f64>,
    /// Battery capacity for the runtime estimate, Wh
    #[arg(long)]
    pub battery_wh: Option<f64>,
}

/// Keys accepted in the `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub degree: Option<usize>,
    pub excise: Option<String>,
    pub n_fill: Option<usize>,
    pub body_length_m: Option<f64>,
    pub head_fraction: Option<f64>,
    pub thickness_first_mm: Option<f64>,
    pub amplitude_m: Option<f64>,
    pub frequency_hz: Option<f64>,
    pub k_ref: Option<f64>,
    pub mass_kg: Option<f64>,
    pub n_samples: Option<usize>,
    pub rho_kg_m3: Option<f64>,
    pub drag_coeff: Option<f64>,
    pub frontal_area_m2: Option<f64>,
    pub added_mass_coeff: Option<f64>,
    pub tip_span_m: Option<f64>,
    pub jobs: Option<usize>,
    pub battery_wh: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })
    }

    fn hydro(&self, base: HydroParams) -> HydroParams {
        HydroParams {
            rho: self.rho_kg_m3.unwrap_or(base.rho),
            drag_coeff: self.drag_coeff.unwrap_or(base.drag_coeff),
            frontal_area: self.frontal_area_m2.unwrap_or(base.frontal_area),
            added_mass_coeff: self.added_mass_coeff.unwrap_or(base.added_mass_coeff),
            tip_span: self.tip_span_m.unwrap_or(base.tip_span),
        }
    }

    fn swim_settings(&self) -> SwimSettings {
        let d = SwimSettings::default();
        SwimSettings {
            actuation: explorer::Actuation {
                amplitude_m: self.amplitude_m.unwrap_or(d.actuation.amplitude_m),
                frequency_hz: self.frequency_hz.unwrap_or(d.actuation.frequency_hz),
            },
            hydro: self.hydro(d.hydro),
            mass_kg: self.mass_kg.unwrap_or(d.mass_kg),
            k_ref: self.k_ref.unwrap_or(d.k_ref),
            n_samples: self.n_samples.unwrap_or(d.n_samples),
            ..d
        }
    }
}

/// Parses `argv` and runs the command. Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let config = match &cli.config {
        Some(path) => ConfigFile::parse(&read_text(path)?)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Fit(a) => fit(a, &config),
        Command::Skeleton(a) => skeleton_cmd(a, &config),
        Command::Bend(a) => bend(a, &config),
        Command::Swim(a) => swim(a, &config, stdout),
        Command::Sweep(a) => sweep(a, &config),
        Command::Pareto(a) => pareto(a),
        Command::Export(a) => export_cmd(a),
        Command::Analyze(a) => analyze(a, &config, stdout),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn check_inputs(paths: &[&Path]) -> Result<()> {
    match paths.iter().find(|p| !p.is_file()) {
        Some(p) => Err(Error::validation(format!("input file {} does not exist", p.display()))),
        None => Ok(()),
    }
}

fn check_outputs(paths: &[&Path]) -> Result<()> {
    for p in paths {
        let parent = dir_of(p);
        if !parent.is_dir() {
            return Err(Error::validation(format!(
                "output directory {} does not exist",
                parent.display()
            )));
        }
    }
    Ok(())
}

fn dir_of(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir_of(path))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    text
}

fn parse_pair(raw: &str, what: &str) -> Result<(f64, f64)> {
    let bad = || Error::validation(format!("{what} must look like A:B, got `{raw}`"));
    let (a, b) = raw.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn load_curves(path: Option<&Path>) -> Result<ProfileFit> {
    match path {
        Some(p) => export::parse_json(&read_text(p)?),
        None => Ok(profile::reference_fit()),
    }
}

fn load_skeleton(path: &Path) -> Result<SkeletonGraph> {
    export::skeleton_from_json(&read_text(path)?)
}

fn fit(a: &FitArgs, config: &ConfigFile) -> Result<()> {
    if let Some(p) = &a.profile {
        check_inputs(&[p])?;
    }
    check_outputs(&[&a.out])?;
    let excise = match a.excise.as_ref().or(config.excise.as_ref()) {
        Some(raw) if raw.eq_ignore_ascii_case("none") => None,
        Some(raw) => Some(parse_pair(raw, "--excise")?),
        None => Some(profile::DEFAULT_EXCISION),
    };
    let opts = FitOptions {
        excise,
        n_fill: a.fill.or(config.n_fill).unwrap_or(profile::DEFAULT_FILL),
        degree: a.degree.or(config.degree).unwrap_or(profile::DEFAULT_DEGREE),
    };
    if opts.degree < 1 {
        return Err(Error::validation(format!("degree must be at least 1, got {}", opts.degree)));
    }
    let samples = match &a.profile {
        Some(p) => profile::load_profile_path(p)?,
        None => profile::bundled_profile(),
    };
    let fit = profile::process_and_fit(&samples, &opts)?;
    write_atomic(&a.out, &to_json(&fit))
}

fn skeleton_cmd(a: &SkeletonArgs, config: &ConfigFile) -> Result<()> {
    if let Some(p) = &a.curves {
        check_inputs(&[p])?;
    }
    check_outputs(&[&a.out])?;
    let mut spec = match &a.preset {
        Some(label) => skeleton::preset(label)?,
        None => {
            let d = SkeletonSpec::default();
            SkeletonSpec {
                h1_h2: match &a.h1h2 {
                    Some(raw) => parse_pair(raw, "--h1h2")?,
                    None => d.h1_h2,
                },
                thickness_ratio: a.thickness_ratio.unwrap_or(d.thickness_ratio),
                n_ribs: a.ribs.unwrap_or(d.n_ribs),
                ..d
            }
        }
    };
    if let Some(v) = a.body_length.or(config.body_length_m) {
        spec.body_length = v;
    }
    if let Some(v) = config.head_fraction {
        spec.head_fraction = v;
    }
    if let Some(v) = config.thickness_first_mm {
        spec.thickness_first_mm = v;
    }
    spec.validate()?;
    let curves = load_curves(a.curves.as_deref())?;
    let graph = generate_skeleton(&spec, &curves.upper, &curves.lower)?;
    write_atomic(&a.out, &export::skeleton_to_json(&graph))
}

fn bend(a: &BendArgs, config: &ConfigFile) -> Result<()> {
    check_inputs(&[&a.skeleton])?;
    check_outputs(&[&a.out])?;
    let graph = load_skeleton(&a.skeleton)?;
    let routing = route_cables(&graph)?;
    let k = stiffnesses_from_graph(&graph, a.k_ref.or(config.k_ref).unwrap_or(tendon::DEFAULT_K_REF));
    let pose = bend_from_cables(&graph, &routing, &ActuationCommand::new(a.delta_top, a.delta_bottom), &k)?;
    write_atomic(&a.out, &to_json(&pose))
}

/// Swim output: the swim result plus the speed in mm/s.
#[derive(Serialize)]
struct SwimReport {
    #[serde(flatten)]
    result: energetics::SwimResult,
    speed_mm_s: f64,
    drag_coeff: f64,
}

fn swim(a: &SwimArgs, config: &ConfigFile, stdout: &mut dyn Write) -> Result<()> {
    check_inputs(&[&a.skeleton])?;
    if let Some(p) = &a.hydro {
        check_inputs(&[p])?;
    }
    if let Some(p) = &a.hydro_out {
        check_outputs(&[p])?;
    }
    let graph = load_skeleton(&a.skeleton)?;
    let mut settings = config.swim_settings();
    if let Some(p) = &a.hydro {
        // an explicit parameter file wins over config keys
        settings.hydro = export::parse_json(&read_text(p)?)?;
    }
    if let Some(v) = a.amplitude {
        settings.actuation.amplitude_m = v;
    }
    if let Some(v) = a.freq {
        settings.actuation.frequency_hz = v;
    }
    if let Some(v) = a.mass {
        settings.mass_kg = v;
    }
    if let Some(target) = a.calibrate_speed {
        settings = explorer::calibrate_settings(&graph, &settings, target)?;
    }
    let result = explorer::simulate(&graph, &settings)?;
    if let Some(p) = &a.hydro_out {
        write_atomic(p, &to_json(&settings.hydro))?;
    }
    let report = SwimReport {
        result,
        speed_mm_s: result.speed * 1000.0,
        drag_coeff: settings.hydro.drag_coeff,
    };
    write!(stdout, "{}", to_json(&report))?;
    Ok(())
}

fn sweep(a: &SweepArgs, config: &ConfigFile) -> Result<()> {
    let mut inputs: Vec<&Path> = a.grid.iter().map(PathBuf::as_path).collect();
    inputs.extend(a.curves.as_deref());
    check_inputs(&inputs)?;
    let mut outputs = vec![a.out.as_path()];
    outputs.extend(a.json.as_deref());
    outputs.extend(a.plot.as_deref());
    check_outputs(&outputs)?;
    let format: ReportFormat = a.format.as_deref().unwrap_or("csv").parse()?;
    if a.jobs == Some(0) {
        return Err(Error::validation("--jobs must be at least 1"));
    }

    let records = match &a.grid {
        Some(path) => {
            let grid: DesignGrid = export::parse_json(&read_text(path)?)?;
            let curves = load_curves(a.curves.as_deref())?;
            explorer::run_sweep(&grid, &curves, a.jobs.or(config.jobs))?
        }
        None => explorer::table1_reference(),
    };
    write_atomic(&a.out, &explorer::emit_report(&records, format)?)?;
    if let Some(p) = &a.json {
        write_atomic(p, &explorer::emit_report(&records, ReportFormat::Json)?)?;
    }
    if let Some(p) = &a.plot {
        write_atomic(p, &explorer::plot_data(&records))?;
    }
    Ok(())
}

fn pareto(a: &ParetoArgs) -> Result<()> {
    check_inputs(&[&a.records])?;
    check_outputs(&[&a.out])?;
    let records = explorer::parse_report_csv(&read_text(&a.records)?)?;
    let front = explorer::pareto_front(&records);
    if front.is_empty() {
        return Err(Error::validation("no record with a valid result"));
    }
    write_atomic(&a.out, &explorer::emit_report(&front, ReportFormat::Csv)?)
}

fn export_cmd(a: &ExportArgs) -> Result<()> {
    check_inputs(&[&a.skeleton])?;
    check_outputs(&[&a.svg])?;
    let graph = load_skeleton(&a.skeleton)?;
    write_atomic(&a.svg, &export::skeleton_to_svg(&graph)?.render())
}

#[derive(Serialize)]
struct Analysis {
    power_w: f64,
    speed_m_s: f64,
    cot: Option<f64>,
    runtime_h: f64,
}

fn analyze(a: &AnalyzeArgs, config: &ConfigFile, stdout: &mut dyn Write) -> Result<()> {
    check_inputs(&[&a.power_log, &a.track])?;
    let open = |p: &Path| fs::File::open(p).map_err(Error::from);
    let log = MeasurementLog {
        samples: energetics::load_power_log(open(&a.power_log)?)?,
        track: energetics::load_track(open(&a.track)?)?,
    };
    let mass = a.mass.or(config.mass_kg).unwrap_or(DERIVED_MASS_KG);
    let power = energetics::average_power(&log)?;
    let speed = energetics::speed_from_track(&log)?;
    let cot = if speed > 0.0 {
        Some(energetics::cot(power, mass, speed)?)
    } else {
        None
    };
    let battery = a.battery_wh.or(config.battery_wh).unwrap_or(BATTERY_WH);
    let report = Analysis {
        power_w: power,
        speed_m_s: speed,
        cot,
        runtime_h: energetics::runtime_hours(battery, power)?,
    };
    write!(stdout, "{}", to_json(&report))?;
    Ok(())
}
