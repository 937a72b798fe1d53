//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::{brute_force_bend, exact_polyfit, Chain};
use dolphin_tail::energetics::{cot, runtime_hours, speed_bl, DERIVED_MASS_KG};
use dolphin_tail::explorer::{
    calibrate_settings, dominates, emit_report, pareto_front, run_sweep, simulate, table1_reference, DesignGrid,
    ReportFormat, SwimSettings,
};
use dolphin_tail::export::{skeleton_from_json, skeleton_to_json, skeleton_to_svg};
use dolphin_tail::hydro::{drag_force, mean_thrust, sample_kinematics};
use dolphin_tail::profile::{
    bundled_profile, excise_dorsal, interpolate_gap, process_and_fit, reference_fit, FitOptions, PolyCurve,
};
use dolphin_tail::skeleton::{generate_skeleton, six_presets, SkeletonSpec, PRESET_LABELS};
use dolphin_tail::tendon::{
    bend_from_cables, route_cables, segment_stiffnesses, stiffnesses_from_graph, ActuationCommand, Cable,
    TendonModel, DEFAULT_K_REF, TRAVEL_LIMIT,
};

const REFERENCE_SPEED: f64 = 0.163181;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let took = start.elapsed();
    check(took < budget, format!("took {took:?}, budget {budget:?}"))
}

fn runtime_arithmetic() -> Outcome {
    let idle = runtime_hours(1.85, 0.48).map_err(|e| e.to_string())?;
    let full = runtime_hours(1.85, 9.33).map_err(|e| e.to_string())?;
    check((idle - 3.854).abs() <= 0.005, format!("idle runtime {idle} h"))?;
    check((full - 0.198).abs() <= 0.003, format!("full runtime {full} h"))?;
    Ok(format!("idle {idle:.4} h, full {full:.4} h"))
}

fn cot_closure() -> Outcome {
    let c = cot(9.33, DERIVED_MASS_KG, REFERENCE_SPEED).map_err(|e| e.to_string())?;
    check((c - 95.0).abs() <= 0.5, format!("COT {c}"))?;
    let m = 9.33 / (95.0 * REFERENCE_SPEED);
    let rel = (m - DERIVED_MASS_KG).abs() / DERIVED_MASS_KG;
    check(rel <= 0.005, format!("recovered mass {m} off by {rel}"))?;
    Ok(format!("COT {c:.3}, recovered mass {m:.4} kg"))
}

fn single_body_length() -> Outcome {
    let rows = table1_reference();
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let res = r.result.expect("reference rows carry results");
            (res.speed, res.speed_bl)
        })
        .collect();
    // least-squares L for v = bl * L
    let num: f64 = pairs.iter().map(|(v, bl)| v * bl).sum();
    let den: f64 = pairs.iter().map(|(_, bl)| bl * bl).sum();
    let fitted = num / den;
    for l in [fitted, 0.3251] {
        for (v, bl) in &pairs {
            let predicted = speed_bl(*v, l).map_err(|e| e.to_string())?;
            let rel = (predicted - bl).abs() / bl;
            check(rel <= 0.005, format!("L = {l}: {predicted} bl/s vs printed {bl} ({rel:.4})"))?;
        }
    }
    Ok(format!("least-squares L = {fitted:.4} m; all six rows within 0.5% at 0.3251 m"))
}

fn reference_pareto() -> Outcome {
    let rows = table1_reference();
    let front = pareto_front(&rows);
    let labels: Vec<&str> = front.iter().map(|r| r.label.as_str()).collect();
    check(labels == ["type4"], format!("front {labels:?}"))?;
    // independent dominance check over all 15 unordered pairs
    let metric = |i: usize| {
        let r = rows[i].result.unwrap();
        (r.speed, r.cot.unwrap())
    };
    let mut pairs = 0;
    let mut dominated = [false; 6];
    for i in 0..6 {
        for j in i + 1..6 {
            pairs += 1;
            let ((si, ci), (sj, cj)) = (metric(i), metric(j));
            let i_over_j = si >= sj && ci <= cj && (si > sj || ci < cj);
            let j_over_i = sj >= si && cj <= ci && (sj > si || cj < ci);
            check(
                dominates(&rows[i], &rows[j]) == i_over_j && dominates(&rows[j], &rows[i]) == j_over_i,
                format!("dominance disagrees on {} / {}", rows[i].label, rows[j].label),
            )?;
            dominated[j] |= i_over_j;
            dominated[i] |= j_over_i;
        }
    }
    let survivors: Vec<&str> = (0..6).filter(|&i| !dominated[i]).map(|i| rows[i].label.as_str()).collect();
    check(pairs == 15 && survivors == ["type4"], format!("oracle front {survivors:?}"))?;
    Ok("front = {type4}; 15 pairs agree".into())
}

fn polynomial_fit() -> Outcome {
    let samples = bundled_profile();
    check(samples.upper().len() == 201, "bundled profile must have 201 rows")?;
    let start = Instant::now();
    let fit = process_and_fit(&samples, &FitOptions::default()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(took < Duration::from_secs(1), format!("fit took {took:?}"))?;
    let (mu, ml) = (fit.report.mse_upper, fit.report.mse_lower);
    check(mu <= 5e-6 && ml <= 5e-6, format!("MSE {mu:e} / {ml:e}"))?;

    let opts = FitOptions::default();
    let normalized = samples.normalized();
    let (lo, hi) = opts.excise.ok_or("default options must excise the fin")?;
    let cut = excise_dorsal(&normalized, lo, hi).map_err(|e| e.to_string())?;
    let filled = interpolate_gap(&cut, opts.n_fill).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (curve, pts) in [(&fit.upper, filled.upper()), (&fit.lower, filled.lower())] {
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
        let exact = exact_polyfit(&xs, &ys, opts.degree);
        for (a, b) in curve.coefficients().iter().zip(&exact) {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    check(worst <= 1e-6, format!("worst relative coefficient error {worst:e}"))?;
    Ok(format!("MSE {mu:.3e} / {ml:.3e} m^2, oracle rel err {worst:.1e}, fit {took:?}"))
}

fn tendon_oracle() -> Outcome {
    let start = Instant::now();
    let spec = SkeletonSpec {
        n_ribs: 4,
        ..SkeletonSpec::with_ratios(1.0, 1.0, 2.0)
    };
    let g = generate_skeleton(&spec, &PolyCurve::constant(0.06), &PolyCurve::constant(-0.06))
        .map_err(|e| e.to_string())?;
    let routing = route_cables(&g).map_err(|e| e.to_string())?;
    let model = TendonModel::new(&g, &routing).map_err(|e| e.to_string())?;
    let k = segment_stiffnesses(&spec, DEFAULT_K_REF);
    check(k.len() == 3, format!("{} segments", k.len()))?;
    let chain = Chain::from_ribs(g.ribs());
    let max_top = (TRAVEL_LIMIT * routing.slack_length_top)
        .min(routing.slack_length_top - model.min_cable_length(Cable::Top));
    let max_bottom = (TRAVEL_LIMIT * routing.slack_length_bottom)
        .min(routing.slack_length_bottom - model.min_cable_length(Cable::Bottom));
    // both directions, from a light pull up to the edge of the feasible range
    let cases = [(true, 0.1), (true, 0.5), (true, 0.95), (false, 0.3), (false, 0.8)];
    let mut worst: f64 = 0.0;
    for (top, frac) in cases {
        let (cmd, delta) = if top {
            (ActuationCommand::new(frac * max_top, 0.0), frac * max_top)
        } else {
            (ActuationCommand::new(0.0, frac * max_bottom), frac * max_bottom)
        };
        let pose = bend_from_cables(&g, &routing, &cmd, &k).map_err(|e| e.to_string())?;
        let oracle = brute_force_bend(&chain, &k, top, chain.rest_length(top) - delta);
        for (a, b) in pose.segment_angles().iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst <= 2e-3, format!("worst angle error {worst:e} rad"))?;
    within_budget(start, Duration::from_secs(30))?;
    Ok(format!("worst angle error {worst:.1e} rad over 5 commands, {:?}", start.elapsed()))
}

fn hydro_calibration() -> Outcome {
    let start = Instant::now();
    let curves = reference_fit();
    let spec = six_presets()[3];
    let g = generate_skeleton(&spec, &curves.upper, &curves.lower).map_err(|e| e.to_string())?;
    let settings = calibrate_settings(&g, &SwimSettings::default(), REFERENCE_SPEED).map_err(|e| e.to_string())?;
    let speed = simulate(&g, &settings).map_err(|e| e.to_string())?.speed;
    let rel = (speed - REFERENCE_SPEED).abs() / REFERENCE_SPEED;
    check(rel <= 0.01, format!("steady speed {speed} ({rel:.4} off)"))?;

    let routing = route_cables(&g).map_err(|e| e.to_string())?;
    let k = stiffnesses_from_graph(&g, settings.k_ref);
    let a = settings.actuation;
    let history = sample_kinematics(&g, &routing, &k, a.amplitude_m, a.frequency_hz, settings.n_samples)
        .map_err(|e| e.to_string())?;
    let residual = mean_thrust(&history, speed, &settings.hydro).map_err(|e| e.to_string())?
        - drag_force(speed, &settings.hydro);
    check(residual.abs() <= 1e-6, format!("thrust - drag = {residual:e} N"))?;
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!(
        "speed {speed:.6} m/s, Cd {:.4}, residual {residual:.1e} N, {:?}",
        settings.hydro.drag_coeff,
        start.elapsed()
    ))
}

fn thickness_trend() -> Outcome {
    let start = Instant::now();
    let grid = DesignGrid {
        h1_h2_values: vec![(1.0, 2.0)],
        thickness_ratios: vec![1.0, 2.0, 3.0],
        calibrate_speed: Some(REFERENCE_SPEED),
        ..DesignGrid::presets()
    };
    let records = run_sweep(&grid, &reference_fit(), None).map_err(|e| e.to_string())?;
    let mut speeds = Vec::new();
    for ratio in [1.0, 2.0, 3.0] {
        let r = records
            .iter()
            .find(|r| r.spec.thickness_ratio == ratio)
            .ok_or(format!("no record for ratio {ratio}"))?;
        let res = r.result.ok_or(format!("{}: {:?}", r.label, r.error))?;
        speeds.push(res.speed);
    }
    check(
        speeds[0] > speeds[1] && speeds[1] > speeds[2],
        format!("speeds {speeds:?} not strictly decreasing"),
    )?;
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!(
        "1:1 {:.4} > 2:1 {:.4} > 3:1 {:.4} m/s",
        speeds[0], speeds[1], speeds[2]
    ))
}

fn sweep_cli(dir: &std::path::Path, jobs: &str, out: &str) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_dolphin-tail"))
        .current_dir(dir)
        .args(["sweep", "--grid", "grid.json", "--out", out, "--jobs", jobs])
        .status()
        .map_err(|e| e.to_string())?;
    check(status.success(), format!("sweep --jobs {jobs} failed"))?;
    std::fs::read(dir.join(out)).map_err(|e| e.to_string())
}

fn determinism_and_round_trips() -> Outcome {
    let start = Instant::now();
    let curves = reference_fit();
    let grid = DesignGrid {
        n_ribs_values: vec![5, 6],
        calibrate_speed: Some(REFERENCE_SPEED),
        ..DesignGrid::presets()
    };
    let serial = run_sweep(&grid, &curves, Some(1)).map_err(|e| e.to_string())?;
    let parallel = run_sweep(&grid, &curves, Some(4)).map_err(|e| e.to_string())?;
    for format in [ReportFormat::Csv, ReportFormat::Json] {
        let a = emit_report(&serial, format).map_err(|e| e.to_string())?;
        let b = emit_report(&parallel, format).map_err(|e| e.to_string())?;
        check(a == b, format!("{format:?} report differs between 1 and 4 jobs"))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let grid_json = serde_json::to_string(&grid).map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("grid.json"), grid_json).map_err(|e| e.to_string())?;
    let one = sweep_cli(dir.path(), "1", "one.csv")?;
    let many = sweep_cli(dir.path(), "8", "many.csv")?;
    check(one == many, "CLI sweep output differs between --jobs 1 and --jobs 8")?;

    for (spec, label) in six_presets().iter().zip(PRESET_LABELS) {
        let g = generate_skeleton(spec, &curves.upper, &curves.lower).map_err(|e| e.to_string())?;
        let again = generate_skeleton(spec, &curves.upper, &curves.lower).map_err(|e| e.to_string())?;
        check(g == again, format!("{label}: generation not deterministic"))?;
        let json = skeleton_to_json(&g);
        let back = skeleton_from_json(&json).map_err(|e| e.to_string())?;
        check(back == g, format!("{label}: JSON round trip changed the graph"))?;
        check(skeleton_to_json(&back) == json, format!("{label}: JSON not stable"))?;
        let svg = skeleton_to_svg(&g).map_err(|e| e.to_string())?;
        check(svg.rib_count() == spec.n_ribs, format!("{label}: SVG has {} ribs", svg.rib_count()))?;
        let svg_back = skeleton_to_svg(&back).map_err(|e| e.to_string())?;
        check(svg.render() == svg_back.render(), format!("{label}: SVG differs after JSON round trip"))?;
        check(svg.render() == skeleton_to_svg(&again).unwrap().render(), format!("{label}: SVG not deterministic"))?;
    }
    within_budget(start, Duration::from_secs(30))?;
    Ok(format!("{} designs identical across job counts; six presets round-trip, {:?}", serial.len(), start.elapsed()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("runtime arithmetic", runtime_arithmetic),
        ("COT closure at the reference speed", cot_closure),
        ("single body length for the reference table", single_body_length),
        ("reference Pareto front", reference_pareto),
        ("degree-17 profile fit", polynomial_fit),
        ("tendon solver vs brute-force oracle", tendon_oracle),
        ("hydro calibration fixed point", hydro_calibration),
        ("thickness ratio slows the 1:2 family", thickness_trend),
        ("determinism and round trips", determinism_and_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
