use dolphin_tail::energetics::{average_power, cot, runtime_hours, ElectricalSample, MeasurementLog};
use dolphin_tail::explorer::{dominates, pareto_front, DesignRecord, Source};
use dolphin_tail::export::{skeleton_from_json, skeleton_to_json, skeleton_to_svg};
use dolphin_tail::profile::{
    bundled_profile, excise_dorsal, fit_polynomial, interpolate_gap, PolyCurve, ProfileSamples, Sample,
};
use dolphin_tail::energetics::SwimResult;
use dolphin_tail::skeleton::{generate_skeleton, rib_thicknesses, SkeletonSpec};
use dolphin_tail::tendon::{
    bend_from_cables, route_cables, segment_stiffnesses, ActuationCommand, Cable, TendonModel, DEFAULT_K_REF,
    TRAVEL_LIMIT,
};
use proptest::prelude::*;

fn body() -> (PolyCurve, PolyCurve) {
    let fit = dolphin_tail::profile::reference_fit();
    (fit.upper, fit.lower)
}

fn spec_strategy() -> impl Strategy<Value = SkeletonSpec> {
    (0.5f64..3.0, 0.5f64..3.0, 0.5f64..4.0, 2usize..10, 0.2f64..0.5).prop_map(|(h1, h2, ratio, n, head)| {
        SkeletonSpec {
            n_ribs: n,
            head_fraction: head,
            ..SkeletonSpec::with_ratios(h1, h2, ratio)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn excision_is_idempotent(lo in 0.2f64..0.45, width in 0.05f64..0.25) {
        let s = bundled_profile().normalized();
        let once = excise_dorsal(&s, lo, lo + width).unwrap();
        let twice = excise_dorsal(&once, lo, lo + width).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn gap_fill_keeps_existing_points(n_fill in 1usize..40) {
        let s = bundled_profile().normalized();
        let cut = excise_dorsal(&s, 0.40, 0.61).unwrap();
        let filled = interpolate_gap(&cut, n_fill).unwrap();
        for p in cut.upper() {
            prop_assert!(filled.upper().contains(p));
        }
        prop_assert_eq!(filled.lower(), cut.lower());
        prop_assert_eq!(filled.upper().len(), cut.upper().len() + n_fill);
    }

    #[test]
    fn polynomial_data_is_reproduced(coeffs in prop::collection::vec(-0.1f64..0.1, 1..6)) {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 / 59.0).collect();
        let eval = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let pts = |shift: f64| xs.iter().map(|&x| Sample { x, y: eval(x) + shift }).collect::<Vec<_>>();
        let s = ProfileSamples::new(pts(0.05), pts(-0.05)).unwrap();
        let fit = fit_polynomial(&s, 17).unwrap();
        for &x in &xs {
            prop_assert!((fit.upper.eval(x).unwrap() - eval(x) - 0.05).abs() <= 1e-9);
            prop_assert!((fit.lower.eval(x).unwrap() - eval(x) + 0.05).abs() <= 1e-9);
        }
    }

    #[test]
    fn skeleton_invariants(spec in spec_strategy()) {
        let (up, lo) = body();
        let t = rib_thicknesses(&spec);
        prop_assert_eq!(t[0], spec.thickness_first_mm);
        prop_assert_eq!(*t.last().unwrap(), spec.thickness_first_mm / spec.thickness_ratio);
        if spec.thickness_ratio > 1.0 {
            prop_assert!(t.windows(2).all(|w| w[1] < w[0]));
        }
        let g = generate_skeleton(&spec, &up, &lo).unwrap();
        let ratio = spec.h1_h2.0 / spec.h1_h2.1;
        for r in g.ribs() {
            let got = (r.y_top - r.y_spine) / (r.y_spine - r.y_bottom);
            prop_assert!((got - ratio).abs() <= 1e-12 * ratio, "{} vs {}", got, ratio);
            prop_assert!(r.x >= spec.head_fraction * spec.body_length);
        }
        let again = generate_skeleton(&spec, &up, &lo).unwrap();
        prop_assert_eq!(skeleton_to_json(&g), skeleton_to_json(&again));
        prop_assert_eq!(skeleton_from_json(&skeleton_to_json(&g)).unwrap(), g.clone());
        let svg = skeleton_to_svg(&g).unwrap();
        prop_assert_eq!(svg.rib_count(), g.ribs().len());
        prop_assert_eq!(svg.render(), skeleton_to_svg(&again).unwrap().render());
    }

    #[test]
    fn cot_inverts_exactly(p in 0.1f64..50.0, m in 0.05f64..5.0, v in 0.01f64..2.0) {
        let c = cot(p, m, v).unwrap();
        prop_assert!(((p / (c * v)) - m).abs() <= 1e-12 * m);
        prop_assert!(((c * m * v) - p).abs() <= 1e-12 * p);
    }

    #[test]
    fn runtime_is_homogeneous(b in 0.1f64..100.0, p in 0.1f64..50.0, s in 0.01f64..100.0) {
        let r = runtime_hours(b, p).unwrap();
        prop_assert!((runtime_hours(b * s, p * s).unwrap() - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn constant_log_averages_to_itself(
        v in 0.5f64..12.0,
        i in 0.0f64..5.0,
        dts in prop::collection::vec(0.001f64..2.0, 1..30),
    ) {
        let mut t = 0.0;
        let mut samples = vec![ElectricalSample { t, voltage: v, current: i }];
        for dt in dts {
            t += dt;
            samples.push(ElectricalSample { t, voltage: v, current: i });
        }
        let log = MeasurementLog { samples, track: vec![] };
        let avg = average_power(&log).unwrap();
        prop_assert!((avg - v * i).abs() <= 4.0 * f64::EPSILON * v * i);
    }

    #[test]
    fn pareto_front_properties(points in prop::collection::vec((0u8..8, 0u8..8), 1..14), seed in any::<u64>()) {
        // small integer grid so ties and duplicates are common
        let recs: Vec<DesignRecord> = points
            .iter()
            .enumerate()
            .map(|(i, &(v, c))| record(&format!("d{i:02}"), 0.01 + v as f64, 1.0 + c as f64))
            .collect();
        let front = pareto_front(&recs);
        let on_front = |r: &DesignRecord| front.iter().any(|f| f.label == r.label);
        for r in &recs {
            let dominated = recs.iter().any(|o| dominates(o, r));
            prop_assert_eq!(on_front(r), !dominated);
            if !on_front(r) {
                prop_assert!(front.iter().any(|f| dominates(f, r)));
            }
        }
        prop_assert!(front.windows(2).all(|w| w[0].result.unwrap().speed >= w[1].result.unwrap().speed));

        let mut shuffled = recs.clone();
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(pareto_front(&shuffled), front);
    }
}

fn record(label: &str, speed: f64, cot: f64) -> DesignRecord {
    DesignRecord {
        label: label.into(),
        spec: SkeletonSpec::default(),
        result: Some(SwimResult {
            speed,
            speed_bl: speed,
            power: cot * speed,
            mass: 1.0,
            cot: Some(cot),
            body_length: 1.0,
        }),
        error: None,
        source: Source::Simulated,
    }
}

/// Flat, mirror-symmetric tail with `n` ribs.
fn symmetric(n: usize) -> (dolphin_tail::skeleton::SkeletonGraph, Vec<f64>) {
    let spec = SkeletonSpec {
        n_ribs: n,
        ..SkeletonSpec::default()
    };
    let g = generate_skeleton(&spec, &PolyCurve::constant(0.05), &PolyCurve::constant(-0.05)).unwrap();
    (g, segment_stiffnesses(&spec, DEFAULT_K_REF))
}

fn feasible_pull(g: &dolphin_tail::skeleton::SkeletonGraph) -> f64 {
    let r = route_cables(g).unwrap();
    let m = TendonModel::new(g, &r).unwrap();
    (TRAVEL_LIMIT * r.slack_length_top).min(r.slack_length_top - m.min_cable_length(Cable::Top))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn swapping_cables_mirrors_the_pose(n in 3usize..8, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (g, k) = symmetric(n);
        let r = route_cables(&g).unwrap();
        let max = feasible_pull(&g) * 0.95;
        let (dt, db) = (a * max, -b * max);
        let p = bend_from_cables(&g, &r, &ActuationCommand::new(dt, db), &k).unwrap();
        let q = bend_from_cables(&g, &r, &ActuationCommand::new(db, dt), &k).unwrap();
        for (x, y) in p.segment_angles().iter().zip(q.segment_angles()) {
            prop_assert!((x + y).abs() <= 1e-9, "{} vs {}", x, y);
        }
    }

    #[test]
    fn poses_are_inextensible_and_meet_taut_lengths(label in 1usize..=6, a in -1.0f64..1.0) {
        let fit = dolphin_tail::profile::reference_fit();
        let spec = dolphin_tail::skeleton::preset(&format!("type{label}")).unwrap();
        let g = generate_skeleton(&spec, &fit.upper, &fit.lower).unwrap();
        let r = route_cables(&g).unwrap();
        let k = segment_stiffnesses(&spec, DEFAULT_K_REF);
        let pull = 0.9 * a * TRAVEL_LIMIT * r.slack_length_top.min(r.slack_length_bottom);
        let cmd = ActuationCommand::new(pull, -pull);
        let Ok(pose) = bend_from_cables(&g, &r, &cmd, &k) else {
            // beyond what the geometry allows; nothing to check
            return Ok(());
        };
        let rest = bend_from_cables(&g, &r, &ActuationCommand::new(0.0, 0.0), &k).unwrap();
        let seg = |m: &[[f64; 2]]| m.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).collect::<Vec<_>>();
        for (x, y) in seg(pose.midline()).iter().zip(seg(rest.midline())) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let (top, bottom) = dolphin_tail::tendon::cable_lengths(&g, &r, &pose).unwrap();
        if pull > 0.0 {
            prop_assert!((top - (r.slack_length_top - pull)).abs() <= 1e-9);
        } else if pull < 0.0 {
            prop_assert!((bottom - (r.slack_length_bottom + pull)).abs() <= 1e-9);
        }
    }
}

/// Tip deflection is the trailing segment's rotation from rest. Lateral tip
/// displacement tracks it until the tail has turned through a right angle.
#[test]
fn tip_deflection_grows_with_pull() {
    let (g, k) = symmetric(6);
    let r = route_cables(&g).unwrap();
    let max = feasible_pull(&g);
    let (mut last_angle, mut last_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..=40 {
        let d = max * i as f64 / 40.0 * 0.999;
        let pose = bend_from_cables(&g, &r, &ActuationCommand::new(d, 0.0), &k).unwrap();
        let angle: f64 = pose.segment_angles().iter().sum();
        let y = pose.trailing_edge()[1];
        assert!(angle > last_angle, "tip rotation fell at pull {d}");
        if angle <= std::f64::consts::FRAC_PI_2 {
            assert!(y > last_y, "lateral tip displacement fell at pull {d}");
        }
        (last_angle, last_y) = (angle, y);
    }
}
