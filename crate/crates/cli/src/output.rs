//! Plot-ready CSV and JSON artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! identical inputs always produce byte-identical files.

use slitlab::analysis::{AnalysisOutput, ComparisonReport};
use slitlab::analytic::{capture_probability, xi_from_screen, Xi};
use slitlab::Result;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// `density.csv`: the baseline-subtracted, unit-normalized screen density.
pub fn write_density_csv(path: &Path, output: &AnalysisOutput) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let density = &output.density;
    let geometry = density.geometry();
    writeln!(w, "pixel_index,x_m,xi,density_per_m")?;
    for (i, (&x, &d)) in density
        .positions()
        .iter()
        .zip(density.density().iter())
        .enumerate()
    {
        let xi = xi_from_screen(x, geometry).value();
        writeln!(w, "{i},{x},{xi},{d}")?;
    }
    w.flush()?;
    Ok(())
}

/// `pcurve.csv`: empirical P(ξ) next to the analytic law.
///
/// The analytic column is renormalized by the sensor's window coverage
/// (1 − window_deficit) so both columns share the same normalization: the
/// empirical density can only integrate over what the sensor saw.
pub fn write_pcurve_csv(path: &Path, output: &AnalysisOutput) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let window_norm = 1.0 - output.density.window_deficit();
    writeln!(w, "xi,p_empirical,p_analytic,deviation")?;
    for &(xi, p_emp) in output.curve.samples() {
        let p_ana = capture_probability(Xi::new(xi)?) / window_norm;
        let dev = p_emp - p_ana;
        writeln!(w, "{xi},{p_emp},{p_ana},{dev}")?;
    }
    w.flush()?;
    Ok(())
}

/// `report.json`: the comparison report, snake_case keys, decimal floats.
pub fn write_report_json(path: &Path, report: &ComparisonReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)
        .map_err(|e| slitlab::Error::Data(format!("report serialization: {e}")))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Analytic-curve CSV for `curve`: Fig.-style columns over [0, xi_max].
pub fn write_curve_csv(
    path: &Path,
    xi_max: f64,
    samples: usize,
    bound: Option<&[(f64, f64)]>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "# capture probability P(xi) for the plane-wave slit state; \
         p_step is the ideal Heisenberg pass/fail step, right-continuous at xi = 1"
    )?;
    if bound.is_some() {
        writeln!(w, "xi,p_planewave,p_step,p_bound")?;
    } else {
        writeln!(w, "xi,p_planewave,p_step")?;
    }
    for i in 0..samples {
        let xi = xi_max * i as f64 / (samples - 1) as f64;
        let p = capture_probability(Xi::new(xi)?);
        let step = if xi >= 1.0 { 1 } else { 0 };
        match bound {
            Some(table) => {
                let b = interpolate(table, xi);
                writeln!(w, "{xi},{p},{step},{b}")?;
            }
            None => writeln!(w, "{xi},{p},{step}")?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Linear interpolation into a user-supplied (xi, value) table, clamped at
/// the ends.
fn interpolate(table: &[(f64, f64)], xi: f64) -> f64 {
    match table.iter().position(|&(x, _)| x >= xi) {
        Some(0) => table[0].1,
        Some(j) => {
            let (x0, y0) = table[j - 1];
            let (x1, y1) = table[j];
            if x1 == x0 {
                y1
            } else {
                y0 + (y1 - y0) * (xi - x0) / (x1 - x0)
            }
        }
        None => table.last().map(|&(_, y)| y).unwrap_or(f64::NAN),
    }
}
