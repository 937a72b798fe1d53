//! Closed-form bottlenose-like side contour used to generate the bundled
//! reference profile (`data/profile_ref.csv`).
//!
//! Chord runs from the rostrum at x = 0 to the fluke root at x = 1 m. The
//! upper curve carries a dorsal fin confined to 0.41..0.59 m so the default
//! excision window removes all of it. Each sample carries a fixed pseudo-random
//! digitization jitter of up to +-2 mm so the fits see realistic residuals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ProfileSamples, Sample};

const JITTER_M: f64 = 0.002;
const SEED: u64 = 0x0d01_f1a5;

/// Number of rows in the bundled reference profile.
pub const REFERENCE_ROWS: usize = 201;

fn half_thickness(x: f64) -> f64 {
    0.004 + 0.125 * (1.0 - (-9.0 * x).exp()) * (1.0 - x) * (1.0 + 0.3 * x)
}

fn camber(x: f64) -> f64 {
    0.015 * (std::f64::consts::PI * x).sin() * (1.0 - 0.5 * x)
}

fn dorsal_fin(x: f64) -> f64 {
    let u = (x - 0.5) / 0.09;
    if u.abs() >= 1.0 {
        0.0
    } else {
        0.05 * (1.0 - u * u).powi(3)
    }
}

pub fn upper(x: f64) -> f64 {
    camber(x) + half_thickness(x) + dorsal_fin(x)
}

pub fn lower(x: f64) -> f64 {
    camber(x) - half_thickness(x)
}

/// Rows of (x, y_upper, y_lower) at `rows` uniform stations over [0, 1] m.
fn rows_with_jitter(rows: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..rows)
        .map(|i| {
            let x = i as f64 / (rows - 1) as f64;
            let ju = rng.gen_range(-JITTER_M..JITTER_M);
            let jl = rng.gen_range(-JITTER_M..JITTER_M);
            (x, upper(x) + ju, lower(x) + jl)
        })
        .collect()
}

pub fn reference_samples(rows: usize) -> ProfileSamples {
    let rows = rows_with_jitter(rows);
    let upper_pts = rows.iter().map(|&(x, y, _)| Sample { x, y }).collect();
    let lower_pts = rows.iter().map(|&(x, _, y)| Sample { x, y }).collect();
    ProfileSamples::new(upper_pts, lower_pts).expect("synthetic contour is valid")
}

/// CSV text of the reference profile, exactly as committed in the repo.
pub fn reference_csv(rows: usize) -> String {
    let mut out = String::from("x_m,y_upper_m,y_lower_m\n");
    for (x, yu, yl) in rows_with_jitter(rows) {
        out.push_str(&format!("{x:?},{yu:?},{yl:?}\n"));
    }
    out
}
