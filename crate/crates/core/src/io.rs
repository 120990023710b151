//! SLITFRM v1 frame files.
//!
//! Binary layout (little-endian):
//!   magic `SLITFRM1` (8 bytes), u32 version = 1, u32 N, u32 M,
//!   f64 pixel_pitch_m, f64 exposure_s, f64 max_voltage_V,
//!   f64 slit_width_m, f64 wavelength_m, f64 screen_distance_m, u64 seed,
//!   then M·N f64 voltages, frame-major.
//!
//! A CSV variant (one frame per line) exists for interoperability; its first
//! line is a `# SLITFRM-CSV v1, ...` header carrying the same metadata.
//!
//! Fields not present in the header (noise parameters, peak scale) are filled
//! with model defaults on read; the analysis pipeline does not depend on them.

use crate::analytic::SlitGeometry;
use crate::ccd::{BeamModel, FrameSet, SensorModel};
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"SLITFRM1";
pub const VERSION: u32 = 1;
/// Byte length of the fixed binary header.
pub const HEADER_LEN: u64 = 8 + 4 + 4 + 4 + 6 * 8 + 8;

pub fn write_binary(path: &Path, set: &FrameSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(set.pixel_count() as u32).to_le_bytes())?;
    w.write_all(&(set.frame_count() as u32).to_le_bytes())?;
    let sensor = set.sensor();
    let g = &set.beam().geometry;
    for v in [
        sensor.pixel_pitch,
        sensor.exposure,
        sensor.max_voltage,
        g.slit_width(),
        g.wavelength(),
        g.screen_distance(),
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&set.seed().to_le_bytes())?;
    for &v in set.raw() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn take<const LEN: usize>(&mut self, what: &str) -> Result<[u8; LEN]> {
        let mut buf = [0u8; LEN];
        let at = self.offset;
        self.inner.read_exact(&mut buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format {
                    offset: at,
                    message: format!("truncated while reading {what}"),
                }
            } else {
                Error::Io(e)
            }
        })?;
        self.offset += LEN as u64;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take::<4>(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take::<8>(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take::<8>(what)?))
    }
}

pub fn read_binary(path: &Path) -> Result<FrameSet> {
    let mut r = Cursor {
        inner: BufReader::new(File::open(path)?),
        offset: 0,
    };
    let magic = r.take::<8>("magic")?;
    if &magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic {magic:02x?}, expected SLITFRM1"),
        });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format {
            offset: 8,
            message: format!("unsupported version {version}"),
        });
    }
    let n = r.u32("pixel count")? as usize;
    let m = r.u32("frame count")? as usize;
    let pixel_pitch = r.f64("pixel pitch")?;
    let exposure = r.f64("exposure")?;
    let max_voltage = r.f64("max voltage")?;
    let slit_width = r.f64("slit width")?;
    let wavelength = r.f64("wavelength")?;
    let screen_distance = r.f64("screen distance")?;
    let seed = r.u64("seed")?;

    let geometry = SlitGeometry::new(slit_width, wavelength, screen_distance)?;
    let sensor = SensorModel {
        pixel_count: n,
        pixel_pitch,
        exposure,
        max_voltage,
        center_pixel: n as f64 / 2.0,
        ..SensorModel::default()
    };
    let beam = BeamModel {
        geometry,
        ..BeamModel::default()
    };

    let mut frames = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        frames.push(r.f64("voltage data")?);
    }
    // Trailing bytes mean the file does not match its own header.
    let mut probe = [0u8; 1];
    if r.inner.read(&mut probe)? != 0 {
        return Err(Error::Format {
            offset: r.offset,
            message: "trailing bytes after declared frame data".into(),
        });
    }
    FrameSet::from_raw(sensor, beam, m, seed, frames)
}

pub fn write_csv(path: &Path, set: &FrameSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let sensor = set.sensor();
    let g = &set.beam().geometry;
    writeln!(
        w,
        "# SLITFRM-CSV v1, N={}, M={}, pixel_pitch_m={}, exposure_s={}, max_voltage_V={}, slit_width_m={}, wavelength_m={}, screen_distance_m={}, seed={}",
        set.pixel_count(),
        set.frame_count(),
        sensor.pixel_pitch,
        sensor.exposure,
        sensor.max_voltage,
        g.slit_width(),
        g.wavelength(),
        g.screen_distance(),
        set.seed()
    )?;
    for frame in set.iter_frames() {
        let mut first = true;
        for &v in frame {
            if !first {
                w.write_all(b",")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn csv_header_field(header: &str, key: &str) -> Result<String> {
    header
        .split(',')
        .filter_map(|part| {
            let part = part.trim();
            part.strip_prefix(&format!("{key}="))
        })
        .next()
        .map(str::to_owned)
        .ok_or_else(|| Error::Format {
            offset: 0,
            message: format!("CSV header missing field {key}"),
        })
}

pub fn read_csv(path: &Path) -> Result<FrameSet> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.ok_or(Error::Format {
        offset: 0,
        message: "empty file".into(),
    })?;
    if !header.starts_with("# SLITFRM-CSV v1") {
        return Err(Error::Format {
            offset: 0,
            message: "missing SLITFRM-CSV v1 header".into(),
        });
    }
    let parse_f = |key: &str| -> Result<f64> {
        csv_header_field(&header, key)?
            .parse()
            .map_err(|_| Error::Format {
                offset: 0,
                message: format!("CSV header field {key} is not a number"),
            })
    };
    let n = parse_f("N")? as usize;
    let m = parse_f("M")? as usize;
    let sensor = SensorModel {
        pixel_count: n,
        pixel_pitch: parse_f("pixel_pitch_m")?,
        exposure: parse_f("exposure_s")?,
        max_voltage: parse_f("max_voltage_V")?,
        center_pixel: n as f64 / 2.0,
        ..SensorModel::default()
    };
    let geometry = SlitGeometry::new(
        parse_f("slit_width_m")?,
        parse_f("wavelength_m")?,
        parse_f("screen_distance_m")?,
    )?;
    let beam = BeamModel {
        geometry,
        ..BeamModel::default()
    };
    let seed: u64 = csv_header_field(&header, "seed")?
        .parse()
        .map_err(|_| Error::Format {
            offset: 0,
            message: "CSV header seed is not an integer".into(),
        })?;

    let mut frames = Vec::with_capacity(m * n);
    for (line_no, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0usize;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "line {}: voltage field {:?} is not a number",
                    line_no + 2,
                    field
                ))
            })?;
            frames.push(v);
            count += 1;
        }
        if count != n {
            return Err(Error::Data(format!(
                "line {}: expected {n} voltages, found {count}",
                line_no + 2
            )));
        }
    }
    FrameSet::from_raw(sensor, beam, m, seed, frames)
}

/// Auto-detects binary vs CSV from the leading bytes.
pub fn read_frames(path: &Path) -> Result<FrameSet> {
    let mut probe = [0u8; 8];
    let got = File::open(path)?.read(&mut probe)?;
    if got >= 8 && &probe == MAGIC {
        read_binary(path)
    } else {
        read_csv(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccd::generate_frameset;

    fn small_set() -> FrameSet {
        let sensor = SensorModel {
            pixel_count: 64,
            center_pixel: 32.0,
            ..SensorModel::default()
        };
        let beam = BeamModel::default();
        generate_frameset(&sensor, &beam, 3, 77).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.slitfrm");
        let set = small_set();
        write_binary(&path, &set).unwrap();
        let back = read_binary(&path).unwrap();
        assert_eq!(back.raw(), set.raw());
        assert_eq!(back.seed(), set.seed());
        assert_eq!(back.pixel_count(), 64);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let set = small_set();
        write_csv(&path, &set).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.raw(), set.raw());
    }

    #[test]
    fn truncated_file_error_names_the_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.slitfrm");
        let set = small_set();
        write_binary(&path, &set).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let cut = bytes.len() - 11;
        std::fs::write(&path, &bytes[..cut]).unwrap();
        match read_binary(&path) {
            Err(Error::Format { offset, .. }) => {
                // The failing read starts within the last (partial) f64.
                assert!(offset as usize >= cut - 8 && offset as usize <= cut);
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected_at_offset_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        let mut f = File::create(&path).unwrap();
        f.write_all(b"NOTAFRAME-FILE--").unwrap();
        match read_binary(&path) {
            Err(Error::Format { offset: 0, .. }) => {}
            other => panic!("expected format error at offset 0, got {other:?}"),
        }
    }

    #[test]
    fn binary_auto_detection_works() {
        let dir = tempfile::tempdir().unwrap();
        let set = small_set();
        let bin = dir.path().join("a.slitfrm");
        let csv = dir.path().join("a.csv");
        write_binary(&bin, &set).unwrap();
        write_csv(&csv, &set).unwrap();
        assert_eq!(read_frames(&bin).unwrap().raw(), set.raw());
        assert_eq!(read_frames(&csv).unwrap().raw(), set.raw());
    }
}
