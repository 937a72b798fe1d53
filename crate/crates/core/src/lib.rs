//! Parametric design toolkit and desk-scale simulator for cable-driven
//! fish-bone dolphin tails.
//!
//! The pipeline runs in stages, one module each:
//!
//! * [`profile`] ingests the 2D body contour, cuts out the dorsal fin, fills
//!   the gap with a cubic spline and fits degree-17 polynomials to the upper
//!   and lower curves.
//! * [`skeleton`] turns those curves and a handful of design parameters into
//!   a tensegrity-style graph of ribs, spine bars and cable strings.
//! * [`tendon`] maps the lengths of the two antagonistic cables to a bent
//!   tail pose by minimizing joint elastic energy.
//! * [`hydro`] estimates mean thrust from the tail's trailing-edge motion,
//!   balances it against quadratic drag and solves for the steady speed.
//! * [`energetics`] holds the cost-of-transport and power arithmetic and the
//!   measurement-log readers.
//! * [`explorer`] sweeps design grids and extracts the speed/COT Pareto front.
//! * [`export`] writes skeletons to JSON and SVG.
//! * [`cli`] wires all of it into the `dolphin-tail` command.

// `!(x > 0.0)` is deliberate throughout: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energetics;
mod error;
pub mod explorer;
pub mod export;
pub mod hydro;
pub mod profile;
pub mod skeleton;
pub mod tendon;

pub use error::{Error, Result};
