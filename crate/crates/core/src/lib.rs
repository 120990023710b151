//! Desk-scale single-slit diffraction laboratory.
//!
//! The crate splits into four layers:
//!
//! - [`analytic`]: closed-form physics — the sine integral, the sinc²
//!   momentum and screen densities, the capture-probability law P(ξ) with its
//!   independent quadrature oracle, and the ξ ↔ screen-coordinate map.
//! - [`ccd`]: a deterministic, seedable synthetic CCD line sensor that
//!   renders the diffraction pattern into voltage frames with baseline,
//!   response nonuniformity, shot and read noise, and saturation clipping.
//! - [`io`]: the SLITFRM v1 frame file format (binary and CSV).
//! - [`analysis`]: the evaluation pipeline — frame averaging, in-situ
//!   baseline estimation, total-voltage normalization, empirical P(ξ), and
//!   comparison against the analytic law.
//!
//! All operations are pure functions of their inputs and all types are
//! immutable once constructed, so everything is safe to share across threads.

pub mod analysis;
pub mod analytic;
pub mod ccd;
pub mod error;
pub mod io;
pub mod quad;

pub use error::{Error, Result};
