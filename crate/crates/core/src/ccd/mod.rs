//! Synthetic CCD line sensor.
//!
//! Replaces the physical bench with a deterministic renderer: the far-field
//! intensity is box-averaged over each pixel aperture, scaled to a target
//! peak voltage on top of a dark baseline, and perturbed by a fixed
//! response-nonuniformity pattern plus per-frame shot and read noise. All
//! randomness is counter-based, so a frame set is a pure function of
//! (sensor, beam, frame count, seed).

pub mod rng;

use crate::analytic::{screen_intensity, SlitGeometry};
use crate::error::{Error, Result};
use crate::quad;
use rayon::prelude::*;

/// Hard cap on the number of voltages a single frame set may hold.
pub const FRAMESET_VALUE_CAP: usize = 1 << 27;

/// Line-sensor electrical and geometric parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    /// Number of pixels N in the line.
    pub pixel_count: usize,
    /// Pixel pitch δx in meters.
    pub pixel_pitch: f64,
    /// Exposure time per snapshot in seconds.
    pub exposure: f64,
    /// Dark-signal baseline voltage (V).
    pub baseline_voltage: f64,
    /// Quoted spread of the dark signal (V); used by the analysis sensitivity
    /// report, not by synthesis.
    pub baseline_spread: f64,
    /// Half-range of the fixed per-pixel response-nonuniformity offset (V).
    pub prnu_spread: f64,
    /// Saturation voltage (V); outputs are clipped to [0, max_voltage].
    pub max_voltage: f64,
    /// Standard deviation of the per-frame Gaussian read noise (V).
    pub read_noise_sigma: f64,
    /// Shot-noise scale: σ at the peak pixel equals this fraction of the
    /// peak signal, falling off as √(signal/peak) elsewhere.
    pub shot_fraction: f64,
    /// Pixel index of the pattern center (may be fractional).
    pub center_pixel: f64,
}

impl Default for SensorModel {
    /// Bench defaults: 2048 px × 14 µm, 1.25 ms exposure, 1.4 mV dark level
    /// with ±0.4 mV spread and PRNU, 4.5 V full scale, pattern centered on
    /// pixel 1024.
    fn default() -> Self {
        Self {
            pixel_count: 2048,
            pixel_pitch: 14e-6,
            exposure: 1.25e-3,
            baseline_voltage: 1.4e-3,
            baseline_spread: 0.4e-3,
            prnu_spread: 0.4e-3,
            max_voltage: 4.5,
            read_noise_sigma: 0.2e-3,
            shot_fraction: 0.01,
            center_pixel: 1024.0,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if self.pixel_count < 2 {
            return Err(Error::Domain(format!(
                "pixel_count must be at least 2, got {}",
                self.pixel_count
            )));
        }
        for (name, v) in [
            ("pixel_pitch", self.pixel_pitch),
            ("exposure", self.exposure),
            ("max_voltage", self.max_voltage),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("baseline_voltage", self.baseline_voltage),
            ("baseline_spread", self.baseline_spread),
            ("prnu_spread", self.prnu_spread),
            ("read_noise_sigma", self.read_noise_sigma),
            ("shot_fraction", self.shot_fraction),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.baseline_voltage + self.baseline_spread + self.prnu_spread >= self.max_voltage {
            return Err(Error::Domain(
                "baseline plus spreads must stay below max_voltage".into(),
            ));
        }
        if !self.center_pixel.is_finite()
            || self.center_pixel < 0.0
            || self.center_pixel >= self.pixel_count as f64
        {
            return Err(Error::Domain(format!(
                "center_pixel {} outside the sensor",
                self.center_pixel
            )));
        }
        Ok(())
    }

    /// Screen coordinate of pixel `i`'s center: x_i = (i − center)·δx.
    pub fn pixel_position(&self, i: usize) -> f64 {
        (i as f64 - self.center_pixel) * self.pixel_pitch
    }
}

/// Illumination: beam geometry plus the target central-pixel signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamModel {
    /// Central-pixel signal above baseline (V).
    pub peak_scale: f64,
    pub geometry: SlitGeometry,
}

impl Default for BeamModel {
    fn default() -> Self {
        Self {
            peak_scale: 4.0,
            geometry: SlitGeometry::default(),
        }
    }
}

impl BeamModel {
    pub fn validate(&self, sensor: &SensorModel) -> Result<()> {
        if !(self.peak_scale.is_finite() && self.peak_scale > 0.0) {
            return Err(Error::Domain(format!(
                "peak_scale must be positive, got {}",
                self.peak_scale
            )));
        }
        if self.peak_scale > sensor.max_voltage {
            return Err(Error::Domain(format!(
                "peak_scale {} exceeds max_voltage {}",
                self.peak_scale, sensor.max_voltage
            )));
        }
        Ok(())
    }
}

/// Box average of the screen intensity over pixel `i`'s aperture,
/// [x_i − δx/2, x_i + δx/2], by fixed 8-point Gauss-Legendre quadrature.
fn pixel_box_integral(i: usize, sensor: &SensorModel, geometry: &SlitGeometry) -> f64 {
    let x = sensor.pixel_position(i);
    let half = 0.5 * sensor.pixel_pitch;
    quad::gauss8(|t| screen_intensity(t, geometry), x - half, x + half)
}

/// Mean (noise-free) voltage of pixel `i`: baseline plus the pixel's share
/// of the diffraction pattern, normalized so the central pixel reads
/// `baseline + peak_scale`.
pub fn expected_pixel_voltage(
    pixel_index: usize,
    sensor: &SensorModel,
    beam: &BeamModel,
) -> Result<f64> {
    sensor.validate()?;
    beam.validate(sensor)?;
    if pixel_index >= sensor.pixel_count {
        return Err(Error::Domain(format!(
            "pixel index {pixel_index} out of range 0..{}",
            sensor.pixel_count
        )));
    }
    let center = sensor.center_pixel.round() as usize;
    let central = pixel_box_integral(center, sensor, &beam.geometry);
    let this = pixel_box_integral(pixel_index, sensor, &beam.geometry);
    Ok(sensor.baseline_voltage + beam.peak_scale * this / central)
}

/// Noise-free voltage vector for the whole line.
pub fn expected_frame(sensor: &SensorModel, beam: &BeamModel) -> Result<Vec<f64>> {
    sensor.validate()?;
    beam.validate(sensor)?;
    let center = sensor.center_pixel.round() as usize;
    let central = pixel_box_integral(center, sensor, &beam.geometry);
    Ok((0..sensor.pixel_count)
        .map(|i| {
            sensor.baseline_voltage
                + beam.peak_scale * pixel_box_integral(i, sensor, &beam.geometry) / central
        })
        .collect())
}

/// Applies the noise model to a precomputed expected-voltage vector.
fn noisy_frame(expected: &[f64], frame_index: u64, sensor: &SensorModel, seed: u64) -> Vec<f64> {
    // σ ∝ √signal, pinned to shot_fraction·peak at the brightest pixel.
    let peak = expected.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - sensor.baseline_voltage;
    expected
        .iter()
        .enumerate()
        .map(|(i, &mean)| {
            let pixel = i as u64;
            let prnu = if sensor.prnu_spread > 0.0 {
                sensor.prnu_spread * (2.0 * rng::uniform(seed, rng::STREAM_PRNU, 0, pixel, 0) - 1.0)
            } else {
                0.0
            };
            let (shot, read) = if sensor.shot_fraction > 0.0 || sensor.read_noise_sigma > 0.0 {
                let (z_shot, z_read) =
                    rng::normal_pair(seed, rng::STREAM_FRAME, frame_index, pixel, 0);
                let signal = (mean - sensor.baseline_voltage).max(0.0);
                let sigma_shot = if peak > 0.0 {
                    sensor.shot_fraction * (signal * peak).sqrt()
                } else {
                    0.0
                };
                (sigma_shot * z_shot, sensor.read_noise_sigma * z_read)
            } else {
                (0.0, 0.0)
            };
            (mean + prnu + shot + read).clamp(0.0, sensor.max_voltage)
        })
        .collect()
}

/// One synthetic snapshot. Pure in (seed, frame_index); regenerating the same
/// coordinates yields an identical frame.
pub fn generate_frame(
    frame_index: u64,
    sensor: &SensorModel,
    beam: &BeamModel,
    seed: u64,
) -> Result<Vec<f64>> {
    let expected = expected_frame(sensor, beam)?;
    Ok(noisy_frame(&expected, frame_index, sensor, seed))
}

/// A stack of M snapshots plus the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    sensor: SensorModel,
    beam: BeamModel,
    frame_count: usize,
    seed: u64,
    frames: Vec<f64>, // frame-major, M × N
}

impl FrameSet {
    /// Assembles a frame set from raw voltages; used by the file reader.
    pub fn from_raw(
        sensor: SensorModel,
        beam: BeamModel,
        frame_count: usize,
        seed: u64,
        frames: Vec<f64>,
    ) -> Result<Self> {
        sensor.validate()?;
        if frames.len() != frame_count * sensor.pixel_count {
            return Err(Error::Data(format!(
                "frame data length {} does not match {} x {}",
                frames.len(),
                frame_count,
                sensor.pixel_count
            )));
        }
        Ok(Self {
            sensor,
            beam,
            frame_count,
            seed,
            frames,
        })
    }

    pub fn sensor(&self) -> &SensorModel {
        &self.sensor
    }

    pub fn beam(&self) -> &BeamModel {
        &self.beam
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn pixel_count(&self) -> usize {
        self.sensor.pixel_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn frame(&self, index: usize) -> &[f64] {
        let n = self.sensor.pixel_count;
        &self.frames[index * n..(index + 1) * n]
    }

    pub fn iter_frames(&self) -> impl Iterator<Item = &[f64]> {
        self.frames.chunks_exact(self.sensor.pixel_count)
    }

    pub fn raw(&self) -> &[f64] {
        &self.frames
    }
}

/// Renders M frames. Frames are generated in parallel; determinism comes from
/// the counter-based draws, not from the scheduling order.
pub fn generate_frameset(
    sensor: &SensorModel,
    beam: &BeamModel,
    frame_count: usize,
    seed: u64,
) -> Result<FrameSet> {
    sensor.validate()?;
    beam.validate(sensor)?;
    if frame_count < 1 {
        return Err(Error::Domain("frame_count must be at least 1".into()));
    }
    let total = frame_count
        .checked_mul(sensor.pixel_count)
        .ok_or_else(|| Error::Capacity("frame set size overflows".into()))?;
    if total > FRAMESET_VALUE_CAP {
        return Err(Error::Capacity(format!(
            "{frame_count} x {} = {total} voltages exceeds the cap of {FRAMESET_VALUE_CAP}",
            sensor.pixel_count
        )));
    }
    let expected = expected_frame(sensor, beam)?;
    let noiseless =
        sensor.prnu_spread == 0.0 && sensor.shot_fraction == 0.0 && sensor.read_noise_sigma == 0.0;
    let frames: Vec<f64> = if noiseless {
        (0..frame_count)
            .flat_map(|_| expected.iter().copied())
            .collect()
    } else {
        (0..frame_count as u64)
            .into_par_iter()
            .flat_map_iter(|f| noisy_frame(&expected, f, sensor, seed))
            .collect()
    };
    FrameSet::from_raw(*sensor, *beam, frame_count, seed, frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_sensor() -> SensorModel {
        SensorModel {
            prnu_spread: 0.0,
            read_noise_sigma: 0.0,
            shot_fraction: 0.0,
            ..SensorModel::default()
        }
    }

    #[test]
    fn central_pixel_reads_baseline_plus_peak() {
        let sensor = SensorModel::default();
        let beam = BeamModel::default();
        let v = expected_pixel_voltage(1024, &sensor, &beam).unwrap();
        assert!((v - (1.4e-3 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn pixel_index_out_of_range_is_domain_error() {
        let sensor = SensorModel::default();
        let beam = BeamModel::default();
        assert!(expected_pixel_voltage(2048, &sensor, &beam).is_err());
    }

    #[test]
    fn first_minimum_pixel_is_near_baseline() {
        let sensor = SensorModel::default();
        let beam = BeamModel::default();
        // First minimum sits ~93.7 pixels off center.
        let g = &beam.geometry;
        let x_min = g.wavelength() * g.screen_distance() / g.slit_width();
        let i = (sensor.center_pixel + x_min / sensor.pixel_pitch).round() as usize;
        let v = expected_pixel_voltage(i, &sensor, &beam).unwrap();
        assert!(
            v - sensor.baseline_voltage < 1e-3 * beam.peak_scale,
            "pixel {i} reads {v}"
        );
    }

    #[test]
    fn noiseless_frame_equals_expected_exactly() {
        let sensor = quiet_sensor();
        let beam = BeamModel::default();
        let expected = expected_frame(&sensor, &beam).unwrap();
        let frame = generate_frame(0, &sensor, &beam, 99).unwrap();
        assert_eq!(frame, expected);
    }

    #[test]
    fn noiseless_frame_is_even_about_center() {
        let sensor = quiet_sensor();
        let beam = BeamModel::default();
        let f = expected_frame(&sensor, &beam).unwrap();
        // Pixel 1024 is the center; 1024+k mirrors 1024-k.
        for k in 1..1024 {
            let a = f[1024 + k] - sensor.baseline_voltage;
            let b = f[1024 - k] - sensor.baseline_voltage;
            let denom = a.abs().max(b.abs()).max(1e-300);
            assert!(
                ((a - b) / denom).abs() < 1e-12,
                "asymmetry at offset {k}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn same_coordinates_give_identical_frames() {
        let sensor = SensorModel::default();
        let beam = BeamModel::default();
        let a = generate_frame(7, &sensor, &beam, 42).unwrap();
        let b = generate_frame(7, &sensor, &beam, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_frame(8, &sensor, &beam, 42).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn frameset_prefix_is_seed_stable() {
        let sensor = SensorModel::default();
        let beam = BeamModel::default();
        let one = generate_frameset(&sensor, &beam, 1, 5).unwrap();
        let two = generate_frameset(&sensor, &beam, 2, 5).unwrap();
        assert_eq!(one.frame(0), two.frame(0));
    }

    #[test]
    fn prnu_pattern_is_frame_invariant() {
        let sensor = SensorModel {
            read_noise_sigma: 0.0,
            shot_fraction: 0.0,
            ..SensorModel::default()
        };
        let beam = BeamModel::default();
        let set = generate_frameset(&sensor, &beam, 3, 11).unwrap();
        assert_eq!(set.frame(0), set.frame(1));
        assert_eq!(set.frame(1), set.frame(2));
    }

    #[test]
    fn voltages_respect_the_clip_range() {
        let sensor = SensorModel::default();
        let beam = BeamModel::default();
        let set = generate_frameset(&sensor, &beam, 4, 3).unwrap();
        for &v in set.raw() {
            assert!((0.0..=sensor.max_voltage).contains(&v));
        }
    }

    #[test]
    fn capacity_cap_is_enforced() {
        let sensor = SensorModel::default();
        let beam = BeamModel::default();
        let too_many = FRAMESET_VALUE_CAP / sensor.pixel_count + 1;
        assert!(matches!(
            generate_frameset(&sensor, &beam, too_many, 0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn central_pixel_mean_converges_with_frames() {
        let sensor = SensorModel::default();
        let beam = BeamModel::default();
        let m = 300;
        let set = generate_frameset(&sensor, &beam, m, 42).unwrap();
        let mean: f64 = set.iter_frames().map(|f| f[1024]).sum::<f64>() / m as f64;
        let expected = 1.4e-3 + 4.0;
        // σ at the peak: shot 1% of 4 V plus read noise, minus clipping bias.
        let sigma = (0.04f64.powi(2) + 0.2e-3f64.powi(2)).sqrt();
        let tol = 4.0 * sigma / (m as f64).sqrt();
        assert!(
            (mean - expected).abs() < tol,
            "mean {mean} vs {expected} (tol {tol})"
        );
    }
}
