//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment, SI units throughout (suffixes in
//! the key names). Unknown keys are rejected with the offending line number
//! so a typo cannot silently fall back to a default. Parsing the serialized
//! form of a config reproduces it exactly.

use slitlab::analytic::SlitGeometry;
use slitlab::ccd::{BeamModel, SensorModel};
use slitlab::{Error, Result};
use std::fmt::Write as _;

/// Everything a `simulate` + `analyze` run needs, with the bench apparatus
/// as defaults: a 124 µm slit, 632.82 nm beam, 257 mm throw onto a
/// 2048 × 14 µm line sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub slit_width_m: f64,
    pub wavelength_m: f64,
    pub screen_distance_m: f64,
    pub pixel_count: usize,
    pub pixel_pitch_m: f64,
    pub exposure_s: f64,
    pub baseline_voltage_v: f64,
    pub baseline_spread_v: f64,
    pub prnu_spread_v: f64,
    pub read_noise_sigma_v: f64,
    pub shot_fraction: f64,
    pub max_voltage_v: f64,
    pub center_pixel: f64,
    pub peak_scale_v: f64,
    pub frames: usize,
    pub seed: u64,
    pub guard_pixels: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sensor = SensorModel::default();
        let beam = BeamModel::default();
        let g = beam.geometry;
        Self {
            slit_width_m: g.slit_width(),
            wavelength_m: g.wavelength(),
            screen_distance_m: g.screen_distance(),
            pixel_count: sensor.pixel_count,
            pixel_pitch_m: sensor.pixel_pitch,
            exposure_s: sensor.exposure,
            baseline_voltage_v: sensor.baseline_voltage,
            baseline_spread_v: sensor.baseline_spread,
            prnu_spread_v: sensor.prnu_spread,
            read_noise_sigma_v: sensor.read_noise_sigma,
            shot_fraction: sensor.shot_fraction,
            max_voltage_v: sensor.max_voltage,
            center_pixel: sensor.center_pixel,
            peak_scale_v: beam.peak_scale,
            frames: 1500,
            seed: 0,
            guard_pixels: 64,
        }
    }
}

impl RunConfig {
    /// Parses the flat text form. Every error names the line it came from.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Data(format!("config line {line_no}: expected `key = value`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            config.set(key, value).map_err(|e| match e {
                Error::Data(msg) => Error::Data(format!("config line {line_no}: {msg}")),
                other => other,
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn float(key: &str, value: &str) -> Result<f64> {
            value
                .parse()
                .map_err(|_| Error::Data(format!("key {key}: {value:?} is not a number")))
        }
        fn integer<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Data(format!("key {key}: {value:?} is not an integer")))
        }
        match key {
            "slit_width_m" => self.slit_width_m = float(key, value)?,
            "wavelength_m" => self.wavelength_m = float(key, value)?,
            "screen_distance_m" => self.screen_distance_m = float(key, value)?,
            "pixel_count" => self.pixel_count = integer(key, value)?,
            "pixel_pitch_m" => self.pixel_pitch_m = float(key, value)?,
            "exposure_s" => self.exposure_s = float(key, value)?,
            "baseline_voltage_v" => self.baseline_voltage_v = float(key, value)?,
            "baseline_spread_v" => self.baseline_spread_v = float(key, value)?,
            "prnu_spread_v" => self.prnu_spread_v = float(key, value)?,
            "read_noise_sigma_v" => self.read_noise_sigma_v = float(key, value)?,
            "shot_fraction" => self.shot_fraction = float(key, value)?,
            "max_voltage_v" => self.max_voltage_v = float(key, value)?,
            "center_pixel" => self.center_pixel = float(key, value)?,
            "peak_scale_v" => self.peak_scale_v = float(key, value)?,
            "frames" => self.frames = integer(key, value)?,
            "seed" => self.seed = integer(key, value)?,
            "guard_pixels" => self.guard_pixels = integer(key, value)?,
            other => {
                return Err(Error::Data(format!("unknown key {other:?}")));
            }
        }
        Ok(())
    }

    /// Serializes to the same flat text form `parse` accepts; the round trip
    /// is the identity (exercised by the unit and integration tests, which is
    /// the only reason the binary itself never calls this).
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            writeln!(out, "{k} = {v}").expect("string write");
        };
        kv("slit_width_m", &self.slit_width_m);
        kv("wavelength_m", &self.wavelength_m);
        kv("screen_distance_m", &self.screen_distance_m);
        kv("pixel_count", &self.pixel_count);
        kv("pixel_pitch_m", &self.pixel_pitch_m);
        kv("exposure_s", &self.exposure_s);
        kv("baseline_voltage_v", &self.baseline_voltage_v);
        kv("baseline_spread_v", &self.baseline_spread_v);
        kv("prnu_spread_v", &self.prnu_spread_v);
        kv("read_noise_sigma_v", &self.read_noise_sigma_v);
        kv("shot_fraction", &self.shot_fraction);
        kv("max_voltage_v", &self.max_voltage_v);
        kv("center_pixel", &self.center_pixel);
        kv("peak_scale_v", &self.peak_scale_v);
        kv("frames", &self.frames);
        kv("seed", &self.seed);
        kv("guard_pixels", &self.guard_pixels);
        out
    }

    /// Builds and validates the typed models this config describes.
    pub fn models(&self) -> Result<(SensorModel, BeamModel)> {
        let geometry =
            SlitGeometry::new(self.slit_width_m, self.wavelength_m, self.screen_distance_m)?;
        let sensor = SensorModel {
            pixel_count: self.pixel_count,
            pixel_pitch: self.pixel_pitch_m,
            exposure: self.exposure_s,
            baseline_voltage: self.baseline_voltage_v,
            baseline_spread: self.baseline_spread_v,
            prnu_spread: self.prnu_spread_v,
            max_voltage: self.max_voltage_v,
            read_noise_sigma: self.read_noise_sigma_v,
            shot_fraction: self.shot_fraction,
            center_pixel: self.center_pixel,
        };
        sensor.validate()?;
        let beam = BeamModel {
            peak_scale: self.peak_scale_v,
            geometry,
        };
        beam.validate(&sensor)?;
        Ok((sensor, beam))
    }

    fn validate(&self) -> Result<()> {
        self.models()?;
        if self.frames == 0 {
            return Err(Error::Data("frames must be at least 1".into()));
        }
        Ok(())
    }
}
