//! Body-profile ingestion, dorsal-fin excision, gap interpolation and the
//! degree-17 polynomial fits of the upper and lower contours.

mod lstsq;
mod spline;
pub mod synthetic;

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use lstsq::{horner, polyfit};
pub use spline::NaturalCubicSpline;

pub const DEFAULT_DEGREE: usize = 17;
pub const DEFAULT_EXCISION: (f64, f64) = (0.40, 0.61);
pub const DEFAULT_FILL: usize = 20;
/// Rows required at load time: enough for a default-degree fit with one spare.
pub const MIN_ROWS: usize = DEFAULT_DEGREE + 2;

const CSV_HEADER: [&str; 3] = ["x_m", "y_upper_m", "y_lower_m"];
const BUNDLED_CSV: &str = include_str!("../../data/profile_ref.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
}

/// Upper and lower contour samples of the center-cut body, in meters.
///
/// Both lists are strictly increasing in x. Wherever the two lists share an
/// abscissa the upper value is not below the lower one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSamples {
    upper: Vec<Sample>,
    lower: Vec<Sample>,
}

impl ProfileSamples {
    pub fn new(upper: Vec<Sample>, lower: Vec<Sample>) -> Result<Self> {
        for (name, pts) in [("upper", &upper), ("lower", &lower)] {
            if pts.len() < 2 {
                return Err(Error::validation(format!(
                    "{name} curve has {} points, need at least 2",
                    pts.len()
                )));
            }
            if pts.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                return Err(Error::validation(format!("{name} curve has a non-finite sample")));
            }
            if let Some(w) = pts.windows(2).find(|w| !(w[1].x > w[0].x)) {
                return Err(Error::validation(format!(
                    "{name} curve x not strictly increasing at x = {}",
                    w[1].x
                )));
            }
        }
        // merge walk over shared abscissae
        let (mut i, mut j) = (0, 0);
        while i < upper.len() && j < lower.len() {
            let (u, l) = (upper[i], lower[j]);
            if u.x < l.x {
                i += 1;
            } else if l.x < u.x {
                j += 1;
            } else {
                if u.y < l.y {
                    return Err(Error::validation(format!(
                        "upper curve below lower curve at x = {}",
                        u.x
                    )));
                }
                i += 1;
                j += 1;
            }
        }
        Ok(Self { upper, lower })
    }

    pub fn upper(&self) -> &[Sample] {
        &self.upper
    }

    pub fn lower(&self) -> &[Sample] {
        &self.lower
    }

    fn x_min(&self) -> f64 {
        self.upper[0].x.min(self.lower[0].x)
    }

    fn x_max(&self) -> f64 {
        self.upper[self.upper.len() - 1]
            .x
            .max(self.lower[self.lower.len() - 1].x)
    }

    /// Chord extent, max(x) - min(x) over both curves.
    pub fn body_length(&self) -> f64 {
        self.x_max() - self.x_min()
    }

    /// Geometrically similar copy whose chord spans exactly [0, 1].
    ///
    /// Both coordinates are divided by the body length, so the result
    /// describes a 1 m body of the same shape.
    pub fn normalized(&self) -> Self {
        let (x0, len) = (self.x_min(), self.body_length());
        let map = |pts: &[Sample]| {
            pts.iter()
                .map(|p| Sample {
                    x: (p.x - x0) / len,
                    y: p.y / len,
                })
                .collect()
        };
        Self {
            upper: map(&self.upper),
            lower: map(&self.lower),
        }
    }
}

/// Reads a profile CSV with header `x_m,y_upper_m,y_lower_m`.
pub fn load_profile<R: Read>(source: R) -> Result<ProfileSamples> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<f64> {
            let raw = record.get(i).unwrap_or_default();
            raw.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("`{raw}` is not a number in column {}", CSV_HEADER[i]),
            })
        };
        let x = field(0)?;
        upper.push(Sample { x, y: field(1)? });
        lower.push(Sample { x, y: field(2)? });
    }
    if upper.len() < MIN_ROWS {
        return Err(Error::validation(format!(
            "profile has {} rows, need at least {MIN_ROWS}",
            upper.len()
        )));
    }
    ProfileSamples::new(upper, lower)
}

pub fn load_profile_path(path: &Path) -> Result<ProfileSamples> {
    let file = std::fs::File::open(path)?;
    load_profile(std::io::BufReader::new(file))
}

/// The synthetic reference contour shipped with the crate (201 rows over [0, 1] m).
pub fn bundled_profile() -> ProfileSamples {
    load_profile(BUNDLED_CSV.as_bytes()).expect("bundled profile is valid")
}

/// Removes upper-curve samples with x in the closed interval `[x_lo, x_hi]`.
/// The lower curve is untouched.
pub fn excise_dorsal(samples: &ProfileSamples, x_lo: f64, x_hi: f64) -> Result<ProfileSamples> {
    if !(x_lo < x_hi) {
        return Err(Error::validation(format!(
            "excision interval [{x_lo}, {x_hi}] is empty"
        )));
    }
    if x_lo < samples.x_min() || x_hi > samples.x_max() {
        return Err(Error::validation(format!(
            "excision interval [{x_lo}, {x_hi}] leaves the chord [{}, {}]",
            samples.x_min(),
            samples.x_max()
        )));
    }
    let upper: Vec<Sample> = samples
        .upper
        .iter()
        .copied()
        .filter(|p| p.x < x_lo || p.x > x_hi)
        .collect();
    if upper.len() < DEFAULT_DEGREE + 2 {
        return Err(Error::validation(format!(
            "excision leaves {} upper points, need at least {}",
            upper.len(),
            DEFAULT_DEGREE + 2
        )));
    }
    Ok(ProfileSamples {
        upper,
        lower: samples.lower.clone(),
    })
}

/// Fills the widest gap of the upper curve with `n_fill` points taken from a
/// natural cubic spline through the surviving upper samples.
///
/// A gap is the largest x-spacing, and it must exceed twice the median
/// spacing. New points are spread uniformly strictly inside the gap and
/// existing points are never modified.
pub fn interpolate_gap(samples: &ProfileSamples, n_fill: usize) -> Result<ProfileSamples> {
    if n_fill == 0 {
        return Ok(samples.clone());
    }
    let upper = &samples.upper;
    if upper.len() < 4 {
        return Err(Error::validation(format!(
            "cubic interpolation needs at least 4 upper points, got {}",
            upper.len()
        )));
    }
    let spacing: Vec<f64> = upper.windows(2).map(|w| w[1].x - w[0].x).collect();
    let (gap_at, gap) = spacing
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least 3 spacings");
    let mut sorted = spacing.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    if !(gap > 2.0 * median) {
        return Err(Error::validation(format!(
            "no gap to fill: widest spacing {gap} is not above twice the median {median}"
        )));
    }

    let xs: Vec<f64> = upper.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = upper.iter().map(|p| p.y).collect();
    let spline = NaturalCubicSpline::new(&xs, &ys)?;
    let (a, b) = (xs[gap_at], xs[gap_at + 1]);
    let step = (b - a) / (n_fill + 1) as f64;
    let fill = (1..=n_fill).map(|k| {
        let x = a + k as f64 * step;
        Sample { x, y: spline.eval(x) }
    });

    let mut out = Vec::with_capacity(upper.len() + n_fill);
    out.extend_from_slice(&upper[..=gap_at]);
    out.extend(fill);
    out.extend_from_slice(&upper[gap_at + 1..]);
    ProfileSamples::new(out, samples.lower.clone())
}

/// Polynomial in the normalized chord coordinate, coefficients lowest order first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyCurveJson", into = "PolyCurveJson")]
pub struct PolyCurve {
    coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyCurveJson {
    degree: usize,
    domain: [f64; 2],
    coefficients: Vec<f64>,
}

impl TryFrom<PolyCurveJson> for PolyCurve {
    type Error = String;

    fn try_from(raw: PolyCurveJson) -> std::result::Result<Self, String> {
        if raw.domain != [0.0, 1.0] {
            return Err(format!("domain must be [0.0, 1.0], got {:?}", raw.domain));
        }
        if raw.coefficients.len() != raw.degree + 1 {
            return Err(format!(
                "degree {} needs {} coefficients, got {}",
                raw.degree,
                raw.degree + 1,
                raw.coefficients.len()
            ));
        }
        PolyCurve::new(raw.coefficients).map_err(|e| e.to_string())
    }
}

impl From<PolyCurve> for PolyCurveJson {
    fn from(c: PolyCurve) -> Self {
        PolyCurveJson {
            degree: c.degree(),
            domain: [0.0, 1.0],
            coefficients: c.coefficients,
        }
    }
}

impl PolyCurve {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::validation("polynomial needs at least one coefficient"));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("non-finite polynomial coefficient"));
        }
        Ok(Self { coefficients })
    }

    /// Constant curve, handy for building uniform test skeletons.
    pub fn constant(value: f64) -> Self {
        Self {
            coefficients: vec![value],
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Value at normalized chord position `x`; extrapolation is refused.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!(
                "chord position {x} outside [0, 1]"
            )));
        }
        Ok(horner(&self.coefficients, x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mse_upper: f64,
    pub mse_lower: f64,
    pub residual_max: f64,
    pub degree: usize,
}

/// The two fitted contours and their fit statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFit {
    pub upper: PolyCurve,
    pub lower: PolyCurve,
    pub report: FitReport,
}

/// Least-squares fit of both curves. Abscissae must already lie in [0, 1]
/// (see [`ProfileSamples::normalized`]).
pub fn fit_polynomial(samples: &ProfileSamples, degree: usize) -> Result<ProfileFit> {
    if degree < 1 {
        return Err(Error::validation(format!("degree must be at least 1, got {degree}")));
    }
    if samples.x_min() < 0.0 || samples.x_max() > 1.0 {
        return Err(Error::Domain(format!(
            "abscissae span [{}, {}], normalize to [0, 1] before fitting",
            samples.x_min(),
            samples.x_max()
        )));
    }
    let mut residual_max = 0.0f64;
    let mut fit_one = |pts: &[Sample], name: &str| -> Result<(PolyCurve, f64)> {
        if pts.len() < degree + 1 {
            return Err(Error::validation(format!(
                "{name} curve has {} points, degree {degree} needs {}",
                pts.len(),
                degree + 1
            )));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
        let coeffs = polyfit(&xs, &ys, degree)?;
        let sse: f64 = pts
            .iter()
            .map(|p| {
                let r = horner(&coeffs, p.x) - p.y;
                residual_max = residual_max.max(r.abs());
                r * r
            })
            .sum();
        Ok((PolyCurve::new(coeffs)?, sse / pts.len() as f64))
    };
    let (upper, mse_upper) = fit_one(&samples.upper, "upper")?;
    let (lower, mse_lower) = fit_one(&samples.lower, "lower")?;
    Ok(ProfileFit {
        upper,
        lower,
        report: FitReport {
            mse_upper,
            mse_lower,
            residual_max,
            degree,
        },
    })
}

/// Processing applied before fitting: excision window, fill count, degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub excise: Option<(f64, f64)>,
    pub n_fill: usize,
    pub degree: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            excise: Some(DEFAULT_EXCISION),
            n_fill: DEFAULT_FILL,
            degree: DEFAULT_DEGREE,
        }
    }
}

/// Normalize, excise, fill and fit in one go.
pub fn process_and_fit(samples: &ProfileSamples, opts: &FitOptions) -> Result<ProfileFit> {
    if opts.degree < 1 {
        return Err(Error::validation(format!(
            "degree must be at least 1, got {}",
            opts.degree
        )));
    }
    let mut s = samples.normalized();
    if let Some((lo, hi)) = opts.excise {
        s = excise_dorsal(&s, lo, hi)?;
        s = interpolate_gap(&s, opts.n_fill)?;
    }
    fit_polynomial(&s, opts.degree)
}

/// Default fit of the bundled reference profile.
pub fn reference_fit() -> ProfileFit {
    process_and_fit(&bundled_profile(), &FitOptions::default()).expect("reference profile fits")
}
