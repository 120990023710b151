//! Closed-form physics of single-slit diffraction and the precision-product
//! statistics built on it.
//!
//! Everything here is a pure function of its arguments. Momentum and screen
//! densities are the squared Fourier transform of the top-hat slit state;
//! [`capture_probability`] is the closed-form integral of that density over a
//! symmetric momentum window, and [`capture_probability_quadrature`] is the
//! independent numerical route used to check it.

mod si;

pub use si::{sine_integral, SI_CROSSOVER};

use crate::error::{Error, Result};
use crate::quad;
use std::f64::consts::PI;

/// Planck constant, exact SI value (J·s). Fixed so golden files stay stable.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Slit/screen geometry: slit width `b` (the position uncertainty), source
/// wavelength and slit-to-screen distance, all in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitGeometry {
    slit_width: f64,
    wavelength: f64,
    screen_distance: f64,
}

impl SlitGeometry {
    pub fn new(slit_width: f64, wavelength: f64, screen_distance: f64) -> Result<Self> {
        for (name, v) in [
            ("slit_width", slit_width),
            ("wavelength", wavelength),
            ("screen_distance", screen_distance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "SlitGeometry: {name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Self {
            slit_width,
            wavelength,
            screen_distance,
        })
    }

    pub fn slit_width(&self) -> f64 {
        self.slit_width
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn screen_distance(&self) -> f64 {
        self.screen_distance
    }

    /// Initial beam momentum p₀ = h/λ₀ (kg·m/s).
    pub fn initial_momentum(&self) -> f64 {
        PLANCK / self.wavelength
    }

    /// Far-field validity indicator b²/(λ₀·L); diagnostic only, not enforced.
    /// Values well below 1 put the screen in the Fraunhofer regime.
    pub fn fraunhofer_number(&self) -> f64 {
        self.slit_width * self.slit_width / (self.wavelength * self.screen_distance)
    }
}

impl Default for SlitGeometry {
    /// Reference bench geometry: 124 µm slit, HeNe 632.82 nm, 257 mm screen.
    fn default() -> Self {
        Self {
            slit_width: 124e-6,
            wavelength: 632.82e-9,
            screen_distance: 0.257,
        }
    }
}

/// Dimensionless precision product ξ = Δp·Δx/h, always ≥ 0 and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Xi(f64);

impl Xi {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Domain(format!(
                "xi must be finite and non-negative, got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Momentum window width Δp = ξ·h/Δx for a given slit width.
    pub fn momentum_width(&self, slit_width: f64) -> f64 {
        self.0 * PLANCK / slit_width
    }
}

/// A sampled ξ → P(ξ) map with strictly increasing ξ and (near-)monotone P.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityCurve {
    samples: Vec<(f64, f64)>,
    label: String,
}

impl ProbabilityCurve {
    /// Validates the sample list: ξ strictly increasing, p ∈ [0, 1] and
    /// nondecreasing up to `mono_tol` (0 for analytic curves, a rounding-scale
    /// tolerance for empirical ones).
    pub fn new(label: impl Into<String>, samples: Vec<(f64, f64)>, mono_tol: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("probability curve needs samples".into()));
        }
        for window in samples.windows(2) {
            if window[1].0 <= window[0].0 {
                return Err(Error::Domain(format!(
                    "xi values must be strictly increasing ({} then {})",
                    window[0].0, window[1].0
                )));
            }
            if window[1].1 + mono_tol < window[0].1 {
                return Err(Error::Data(format!(
                    "probability not monotone at xi = {}: {} -> {}",
                    window[1].0, window[0].1, window[1].1
                )));
            }
        }
        for &(xi, p) in &samples {
            if !(0.0..=1.0 + 1e-12).contains(&p) || xi < 0.0 {
                return Err(Error::Domain(format!(
                    "curve sample out of range: (xi = {xi}, p = {p})"
                )));
            }
        }
        Ok(Self {
            samples,
            label: label.into(),
        })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn xi_min(&self) -> f64 {
        self.samples[0].0
    }

    pub fn xi_max(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Linear interpolation of P at `xi`; errors outside the sampled range.
    pub fn value_at(&self, xi: f64) -> Result<f64> {
        if xi < self.xi_min() || xi > self.xi_max() {
            return Err(Error::Domain(format!(
                "xi = {xi} outside curve domain [{}, {}]",
                self.xi_min(),
                self.xi_max()
            )));
        }
        let idx = self
            .samples
            .partition_point(|&(x, _)| x <= xi)
            .saturating_sub(1);
        let (x0, p0) = self.samples[idx];
        if xi == x0 || idx + 1 == self.samples.len() {
            return Ok(p0);
        }
        let (x1, p1) = self.samples[idx + 1];
        Ok(p0 + (p1 - p0) * (xi - x0) / (x1 - x0))
    }
}

/// sin(x)/x with the removable singularity hard-coded.
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Momentum density |φ(p)|² = (Δx/h)·sinc²(π·Δx·p/h) behind a slit of width
/// `slit_width` (per kg·m/s). At p = 0 this is the peak value Δx/h.
pub fn momentum_density(p: f64, slit_width: f64) -> Result<f64> {
    if !(slit_width.is_finite() && slit_width > 0.0) {
        return Err(Error::Domain(format!(
            "momentum_density: slit_width must be positive, got {slit_width}"
        )));
    }
    if !p.is_finite() {
        return Err(Error::Domain(format!(
            "momentum_density: non-finite momentum {p}"
        )));
    }
    let s = sinc(PI * slit_width * p / PLANCK);
    Ok(slit_width / PLANCK * s * s)
}

/// Far-field screen intensity |φ̃(x)|² = (b/λ₀L)·sinc²(π·b·x/λ₀L) (per meter).
///
/// This is the momentum density pushed to the screen through p → x·p₀/L; the
/// test suite asserts that identity pointwise.
pub fn screen_intensity(x: f64, geometry: &SlitGeometry) -> f64 {
    let scale = geometry.slit_width() / (geometry.wavelength() * geometry.screen_distance());
    let s = sinc(PI * scale * x);
    scale * s * s
}

/// Probability that the post-slit momentum falls in the symmetric window
/// |p| ≤ Δp/2 of total width Δp = ξ·h/Δx:
///
///   P(ξ) = (2/π)·[Si(πξ) − (2/π)·sin²(πξ/2)/ξ],  P(0) = 0.
pub fn capture_probability(xi: Xi) -> f64 {
    let x = xi.value();
    if x == 0.0 {
        return 0.0;
    }
    let si = sine_integral(PI * x).expect("finite xi");
    let s = (PI * x / 2.0).sin();
    let p = 2.0 / PI * (si - 2.0 / PI * s * s / x);
    // The closed form is bounded by construction; assert rather than clip.
    assert!(
        (-1e-12..=1.0 + 1e-12).contains(&p),
        "capture probability out of range at xi = {x}: {p}"
    );
    p
}

/// Analytic derivative dP/dξ = (4/π²)·sin²(πξ/2)/ξ².
pub fn capture_probability_derivative(xi: Xi) -> f64 {
    let x = xi.value();
    if x == 0.0 {
        // Limit of (4/π²)·(πξ/2)²/ξ² as ξ → 0.
        return 1.0;
    }
    let s = (PI * x / 2.0).sin();
    4.0 / (PI * PI) * s * s / (x * x)
}

/// Independent quadrature route for [`capture_probability`]: integrates
/// [`momentum_density`] over the symmetric window |p| ≤ Δp/2 with adaptive
/// Simpson. Agreement with the closed form within `rel_tol` is a contract
/// the test suite enforces.
pub fn capture_probability_quadrature(xi: Xi, rel_tol: f64) -> Result<f64> {
    if !(1e-14..1e-2).contains(&rel_tol) {
        return Err(Error::Domain(format!(
            "rel_tol must lie in (1e-14, 1e-2), got {rel_tol}"
        )));
    }
    let x = xi.value();
    if x == 0.0 {
        return Ok(0.0);
    }
    // Reference slit width; the result is independent of it because the
    // window scales with the same Δx.
    let b = SlitGeometry::default().slit_width();
    // Substitute u = Δx·p/h so the integrand is O(1) for the quadrature; the
    // window |p| ≤ Δp/2 becomes |u| ≤ ξ/2.
    let scale = PLANCK / b;
    let f = |u: f64| momentum_density(u * scale, b).expect("finite momentum") * scale;
    let half = 0.5 * x;
    // Integrate in half-lobe segments (breakpoints at both the zeros and the
    // peaks of the sinc² oscillation): handing the whole window to adaptive
    // Simpson in one piece invites spurious early convergence, and segments
    // symmetric about an extremum flatter the error estimate.
    let segments = (2.0 * half).ceil().max(1.0) as usize;
    let abs_tol = 0.05 * rel_tol * x.clamp(1e-6, 1.0) / segments as f64;
    let mut integral = 0.0;
    let mut lo = 0.0f64;
    while lo < half {
        let hi = (lo + 0.5).min(half);
        integral += quad::adaptive_simpson(f, lo, hi, abs_tol, quad::DEFAULT_MAX_DEPTH)?;
        lo = hi;
    }
    Ok(2.0 * integral)
}

/// Screen coordinate → precision product: ξ = 2·b·|x| / (λ₀·L).
pub fn xi_from_screen(x: f64, geometry: &SlitGeometry) -> Xi {
    let xi = 2.0 * geometry.slit_width() * x.abs()
        / (geometry.wavelength() * geometry.screen_distance());
    Xi(xi)
}

/// Inverse of [`xi_from_screen`]: the (non-negative) screen coordinate whose
/// symmetric window realizes the given ξ.
pub fn screen_from_xi(xi: Xi, geometry: &SlitGeometry) -> f64 {
    xi.value() * geometry.wavelength() * geometry.screen_distance() / (2.0 * geometry.slit_width())
}

/// Number of uniform panels used for the analytic forbidden-fraction Simpson
/// rule; the integrand is smooth, so a fixed high count suffices.
pub const FORBIDDEN_FRACTION_PANELS: usize = 1 << 14;

/// Mean analytic capture probability over ξ ∈ [0, xi_max] — the fraction of
/// the nominally forbidden precision range that still yields detections.
pub fn forbidden_fraction_analytic(xi_max: f64) -> Result<f64> {
    if !(xi_max.is_finite() && xi_max > 0.0) {
        return Err(Error::Domain(format!(
            "xi_max must be positive, got {xi_max}"
        )));
    }
    let integral = quad::composite_simpson(
        |x| capture_probability(Xi(x.max(0.0))),
        0.0,
        xi_max,
        FORBIDDEN_FRACTION_PANELS,
    );
    Ok(integral / xi_max)
}

/// Mean of a sampled curve over ξ ∈ [0, xi_max] by the trapezoid rule, with
/// linear interpolation at the upper boundary.
pub fn forbidden_fraction_curve(curve: &ProbabilityCurve, xi_max: f64) -> Result<f64> {
    if !(xi_max.is_finite() && xi_max > 0.0) {
        return Err(Error::Domain(format!(
            "xi_max must be positive, got {xi_max}"
        )));
    }
    if curve.xi_min() > 0.0 || curve.xi_max() < xi_max {
        return Err(Error::Domain(format!(
            "curve domain [{}, {}] does not cover [0, {xi_max}]",
            curve.xi_min(),
            curve.xi_max()
        )));
    }
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &(x, p) in curve.samples() {
        if x > xi_max {
            break;
        }
        if let Some((x0, p0)) = prev {
            integral += 0.5 * (p0 + p) * (x - x0);
        }
        prev = Some((x, p));
    }
    if let Some((x0, p0)) = prev {
        if x0 < xi_max {
            let p_end = curve.value_at(xi_max)?;
            integral += 0.5 * (p0 + p_end) * (xi_max - x0);
        }
    }
    Ok(integral / xi_max)
}

/// Top-hat slit state: amplitude 1/√b on |x| ≤ b/2, zero outside.
///
/// Note: the half-width support b/2 (not b) is what makes the state
/// unit-normalized and its Fourier transform equal to [`momentum_density`];
/// a width-b support would carry norm 2 and contradict the density formula.
pub fn slit_wavefunction(x: f64, slit_width: f64) -> Result<f64> {
    if !(slit_width.is_finite() && slit_width > 0.0) {
        return Err(Error::Domain(format!(
            "slit_wavefunction: slit_width must be positive, got {slit_width}"
        )));
    }
    if x.abs() <= slit_width / 2.0 {
        Ok(1.0 / slit_width.sqrt())
    } else {
        Ok(0.0)
    }
}

/// Second moment of the momentum density truncated at |p| ≤ `cutoff`:
/// M₂(K) = ∫_{|p|≤K} p²·|φ(p)|² dp.
///
/// Grows without bound (asymptotically linear in K), which is why a plain
/// momentum standard deviation is useless for the slit state.
pub fn truncated_second_moment(cutoff: f64, slit_width: f64) -> Result<f64> {
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::Domain(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    if !(slit_width.is_finite() && slit_width > 0.0) {
        return Err(Error::Domain(format!(
            "slit_width must be positive, got {slit_width}"
        )));
    }
    // u = Δx·p/h turns p²·|φ|² dp into (h/Δx)²·sin²(πu)/π² du, a smooth
    // bounded integrand with unit period.
    let kappa = slit_width * cutoff / PLANCK;
    let integrand = |u: f64| {
        let s = (PI * u).sin();
        s * s / (PI * PI)
    };
    let panels = ((64.0 * kappa).ceil() as usize)
        .next_power_of_two()
        .max(4096);
    let coarse = quad::composite_simpson(integrand, -kappa, kappa, panels);
    let fine = quad::composite_simpson(integrand, -kappa, kappa, panels * 2);
    if (fine - coarse).abs() > 1e-9 * fine.abs().max(1e-30) {
        return Err(Error::Convergence(format!(
            "second-moment quadrature did not settle at cutoff {cutoff}"
        )));
    }
    let scale = PLANCK / slit_width;
    Ok(scale * scale * fine)
}
