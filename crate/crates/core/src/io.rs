//! Binary sinogram and image files, little-endian throughout.
//!
//! Sinogram (`SMRTSINO`, version 1), header of 60 bytes:
//!
//! | offset | size | field                                                  |
//! |-------:|-----:|--------------------------------------------------------|
//! | 0      | 8    | magic `SMRTSINO`                                       |
//! | 8      | 1    | version `u8`                                           |
//! | 9      | 1    | dimension `n`                                          |
//! | 10     | 1    | layout kind: 0 sphere, 1 box                           |
//! | 11     | 1    | measure convention: 0 surface, 1 normalized            |
//! | 12     | 24   | 3 × `f64`: sphere `[R, 0, 0]`, box `[L1, L2, L3]`      |
//! | 36     | 8    | 2 × `u32`: sphere resolution, box `[per_face, 0]`      |
//! | 44     | 4    | detector count `u32`                                   |
//! | 48     | 4    | radial samples `Nr` `u32`                              |
//! | 52     | 8    | `r_max` `f64`                                          |
//! | 60     | …    | `count × Nr` `f64`, detector-major                     |
//!
//! Raw image (`SMRTIMG\0`, version 1): `u32` version, `u32 n`, `u32 N`,
//! `f64 a`, `u32` axes, 3 × `f64` centre, then `N^axes` `f64` values with the
//! first coordinate varying fastest.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forward::{MeasureConvention, RadialGrid, Sinogram};
use crate::geometry::{DetectorSet, ImageGrid, Layout};

pub const SINOGRAM_MAGIC: &[u8; 8] = b"SMRTSINO";
pub const SINOGRAM_VERSION: u8 = 1;
pub const SINOGRAM_HEADER_LEN: usize = 60;
pub const IMAGE_MAGIC: &[u8; 8] = b"SMRTIMG\0";
pub const IMAGE_VERSION: u32 = 1;
const IMAGE_HEADER_LEN: usize = 8 + 4 + 4 + 4 + 8 + 4 + 24;

pub fn encode_sinogram(s: &Sinogram) -> Vec<u8> {
    let det = s.detectors();
    let mut out = Vec::with_capacity(SINOGRAM_HEADER_LEN + 8 * s.values().len());
    out.extend_from_slice(SINOGRAM_MAGIC);
    let (kind, params, res) = match *det.layout() {
        Layout::Sphere { radius, resolution } => (0u8, [radius, 0.0, 0.0], resolution),
        Layout::Box { extents, per_face } => (1u8, extents, [per_face, 0]),
    };
    out.extend_from_slice(&[SINOGRAM_VERSION, s.dim() as u8, kind, s.convention().code()]);
    params.iter().for_each(|p| out.extend_from_slice(&p.to_le_bytes()));
    res.iter().for_each(|&r| out.extend_from_slice(&(r as u32).to_le_bytes()));
    out.extend_from_slice(&(det.len() as u32).to_le_bytes());
    out.extend_from_slice(&(s.radial().len() as u32).to_le_bytes());
    out.extend_from_slice(&s.radial().r_max().to_le_bytes());
    s.values().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    out
}

/// Little-endian cursor over a byte slice; every read is bounds-checked.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let out = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("truncated file: need {end} bytes, have {}", self.bytes.len())))?;
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn payload(&mut self, count: usize) -> Result<Vec<f64>> {
        let rest = &self.bytes[self.pos..];
        if rest.len() != 8 * count {
            return Err(Error::Format(format!(
                "payload has {} bytes, header promises {} values ({} bytes)",
                rest.len(),
                count,
                8 * count
            )));
        }
        Ok(rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_sinogram(bytes: &[u8]) -> Result<Sinogram> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != SINOGRAM_MAGIC {
        return Err(Error::Format("not a sinogram file (bad magic)".into()));
    }
    let version = r.u8()?;
    if version != SINOGRAM_VERSION {
        return Err(Error::Version {
            found: version,
            expected: SINOGRAM_VERSION,
        });
    }
    let dim = r.u8()? as usize;
    let kind = r.u8()?;
    let convention = MeasureConvention::from_code(r.u8()?)?;
    let params = [r.f64()?, r.f64()?, r.f64()?];
    let res = [r.u32()? as usize, r.u32()? as usize];
    let count = r.u32()? as usize;
    let nr = r.u32()? as usize;
    let r_max = r.f64()?;
    let layout = match kind {
        0 => Layout::Sphere {
            radius: params[0],
            resolution: res,
        },
        1 => Layout::Box {
            extents: params,
            per_face: res[0],
        },
        k => return Err(Error::Format(format!("unknown layout kind {k}"))),
    };
    let det = DetectorSet::from_layout(dim, &layout)?;
    if det.len() != count {
        return Err(Error::Format(format!(
            "header lists {count} detectors but the layout has {}",
            det.len()
        )));
    }
    let values = r.payload(count * nr)?;
    Sinogram::new(det, RadialGrid::new(r_max, nr)?, convention, values)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn save_sinogram(path: impl AsRef<Path>, s: &Sinogram) -> Result<()> {
    write(path.as_ref(), &encode_sinogram(s))
}

pub fn load_sinogram(path: impl AsRef<Path>) -> Result<Sinogram> {
    decode_sinogram(&read(path.as_ref())?)
}

pub fn encode_image(grid: &ImageGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(IMAGE_HEADER_LEN + 8 * grid.len());
    out.extend_from_slice(IMAGE_MAGIC);
    for v in [IMAGE_VERSION, grid.dim() as u32, grid.points_per_axis() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&grid.half_width().to_le_bytes());
    out.extend_from_slice(&(grid.axes() as u32).to_le_bytes());
    grid.center().iter().for_each(|c| out.extend_from_slice(&c.to_le_bytes()));
    grid.values().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    out
}

pub fn decode_image(bytes: &[u8]) -> Result<ImageGrid> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != IMAGE_MAGIC {
        return Err(Error::Format("not an image file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != IMAGE_VERSION {
        return Err(Error::Version {
            found: version.min(u8::MAX as u32) as u8,
            expected: IMAGE_VERSION as u8,
        });
    }
    let dim = r.u32()? as usize;
    let n = r.u32()? as usize;
    let a = r.f64()?;
    let axes = r.u32()? as usize;
    let center = [r.f64()?, r.f64()?, r.f64()?];
    let grid = ImageGrid::new(dim, axes, center, a, n)?;
    let values = r.payload(grid.len())?;
    grid.with_values(values)
}

pub fn save_image(path: impl AsRef<Path>, grid: &ImageGrid) -> Result<()> {
    write(path.as_ref(), &encode_image(grid))
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    decode_image(&read(path.as_ref())?)
}

/// 8-bit binary PGM of the grid (the middle slice for a volume), min–max
/// normalised, top row = largest second coordinate. A constant image maps
/// to all zeros.
pub fn encode_pgm(grid: &ImageGrid) -> Vec<u8> {
    let n = grid.points_per_axis();
    let plane = &grid.values()[(grid.len() / (n * n)) / 2 * n * n..][..n * n];
    let (lo, hi) = plane
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for row in (0..n).rev() {
        out.extend(plane[row * n..(row + 1) * n].iter().map(|&v| {
            if span > 0.0 {
                (255.0 * (v - lo) / span).round() as u8
            } else {
                0
            }
        }));
    }
    out
}

pub fn save_pgm(path: impl AsRef<Path>, grid: &ImageGrid) -> Result<()> {
    write(path.as_ref(), &encode_pgm(grid))
}

/// Writes `bytes` to a sibling temporary file and renames it into place, so a
/// failed run never leaves a half-written output.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    write(Path::new(&tmp), bytes)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
