//! Numerical integration primitives shared across the crate.
//!
//! Adaptive Simpson is the workhorse for smooth one-dimensional integrands;
//! the fixed 8-point Gauss-Legendre rule covers per-pixel box averages where
//! the interval is already small.

use crate::error::{Error, Result};

/// Default absolute tolerance for adaptive quadrature.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Default maximum recursion depth for adaptive quadrature.
pub const DEFAULT_MAX_DEPTH: u32 = 40;

/// Adaptive Simpson quadrature of `f` on `[a, b]` with absolute tolerance `abs_tol`.
///
/// Fails with [`Error::Convergence`] if the local error estimate is still above
/// the tolerance once `max_depth` subdivisions have been spent.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, abs_tol: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("integration bounds must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0;
    simpson_step(&f, a, b, fa, fm, fb, whole, abs_tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) * (fa + 4.0 * flm + fm) / 6.0;
    let right = (b - m) * (fm + 4.0 * frm + fb) / 6.0;
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * abs_tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Convergence(format!(
            "adaptive Simpson did not reach tolerance {abs_tol:e} on [{a}, {b}]"
        )));
    }
    let half_tol = 0.5 * abs_tol;
    let l = simpson_step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?;
    Ok(l + r)
}

/// Composite Simpson rule with `panels` uniform panels (`panels` must be even).
pub fn composite_simpson<F>(f: F, a: f64, b: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    assert!(
        panels >= 2 && panels.is_multiple_of(2),
        "panel count must be even"
    );
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

// Nodes and weights of the 8-point Gauss-Legendre rule on [-1, 1].
const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Fixed 8-point Gauss-Legendre quadrature of `f` on `[a, b]`.
pub fn gauss8<F>(f: F, a: f64, b: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (node, weight) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        sum += weight * f(mid + half * node);
    }
    sum * half
}

/// Neumaier (improved Kahan) compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        let v = adaptive_simpson(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 20).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_matches_known_integral() {
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-12, 40).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn simpson_reports_convergence_failure() {
        // Depth 0 cannot resolve an oscillatory integrand.
        let r = adaptive_simpson(|x| (50.0 * x).sin(), 0.0, 10.0, 1e-14, 0);
        assert!(matches!(r, Err(Error::Convergence(_))));
    }

    #[test]
    fn gauss8_is_exact_for_low_degree() {
        let v = gauss8(|x| x * x * x + x, -1.0, 3.0);
        assert!((v - (20.0 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_survives_cancellation() {
        let v = compensated_sum([1e16, 1.0, -1e16]);
        assert_eq!(v, 1.0);
    }
}
