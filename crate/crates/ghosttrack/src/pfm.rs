//! Portable Float Map depth rasters and PGM person masks.
//!
//! PFM header: `Pf\n<width> <height>\n<scale>\n`, then 32-bit floats in
//! row-major order with rows stored bottom-to-top. A negative scale marks
//! little-endian data. Masks are binary PGM (P5, 8-bit, nonzero = foreground).

use std::fs;
use std::io::Write;
use std::path::Path;

use ghosttrack_core::depth::{DepthField, Mask};

use crate::error::{Error, Result};

/// Read a one-channel PFM file into a depth field.
///
/// Depths must be finite and positive; anything else is rejected with the
/// offending pixel position.
pub fn read_pfm(path: &Path, frame_id: u64) -> Result<DepthField> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0usize;

    let mut token = |what: &str| -> Result<String> {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, format!("truncated header: missing {what}")));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };

    let magic = token("magic")?;
    if magic != "Pf" {
        return Err(Error::format(
            path,
            format!("expected grayscale PFM magic 'Pf', got '{magic}'"),
        ));
    }
    let width: u32 = token("width")?.parse().map_err(|_| Error::format(path, "bad width"))?;
    let height: u32 = token("height")?.parse().map_err(|_| Error::format(path, "bad height"))?;
    let scale: f64 = token("scale")?.parse().map_err(|_| Error::format(path, "bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(path, "scale must be a finite non-zero number"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;

    let n = (width as usize) * (height as usize);
    if data.len() < pos + 4 * n {
        return Err(Error::format(
            path,
            format!("raster truncated: need {} bytes, have {}", 4 * n, data.len() - pos),
        ));
    }
    let little_endian = scale < 0.0;
    let mut values = vec![0.0f32; n];
    for row in 0..height as usize {
        // PFM rows run bottom-to-top
        let dst_row = (height as usize) - 1 - row;
        for col in 0..width as usize {
            let off = pos + 4 * (row * width as usize + col);
            let bytes = [data[off], data[off + 1], data[off + 2], data[off + 3]];
            let v =
                if little_endian { f32::from_le_bytes(bytes) } else { f32::from_be_bytes(bytes) };
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::format(
                    path,
                    format!("invalid depth {v} at pixel ({col}, {dst_row})"),
                ));
            }
            values[dst_row * width as usize + col] = v;
        }
    }
    DepthField::new(width, height, frame_id, values).map_err(Error::from)
}

/// Write a depth field as little-endian grayscale PFM.
pub fn write_pfm(path: &Path, field: &DepthField) -> Result<()> {
    let mut out = Vec::with_capacity(32 + field.values().len() * 4);
    write!(out, "Pf\n{} {}\n-1.0\n", field.width(), field.height()).expect("vec write");
    let w = field.width() as usize;
    for row in (0..field.height() as usize).rev() {
        for col in 0..w {
            out.extend_from_slice(&field.values()[row * w + col].to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a binary PGM (P5, maxval <= 255) as a foreground mask.
pub fn read_pgm_mask(path: &Path) -> Result<Mask> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0usize;
    let mut token = |what: &str| -> Result<String> {
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, format!("truncated header: missing {what}")));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };

    let magic = token("magic")?;
    if magic != "P5" {
        return Err(Error::format(path, format!("expected PGM magic 'P5', got '{magic}'")));
    }
    let width: u32 = token("width")?.parse().map_err(|_| Error::format(path, "bad width"))?;
    let height: u32 = token("height")?.parse().map_err(|_| Error::format(path, "bad height"))?;
    let maxval: u32 = token("maxval")?.parse().map_err(|_| Error::format(path, "bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(path, "only 8-bit PGM masks are supported"));
    }
    pos += 1;
    let n = (width as usize) * (height as usize);
    if data.len() < pos + n {
        return Err(Error::format(path, "raster truncated"));
    }
    Mask::new(width, height, data[pos..pos + n].to_vec()).map_err(Error::from)
}

/// Write a foreground mask as binary PGM.
pub fn write_pgm_mask(path: &Path, width: u32, height: u32, data: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(32 + data.len());
    write!(out, "P5\n{width} {height}\n255\n").expect("vec write");
    out.extend_from_slice(data);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Depth raster filename for a 1-based frame index.
pub fn depth_file_name(frame: u64) -> String {
    format!("frame_{frame:06}.pfm")
}

/// Mask filename for a 1-based frame index.
pub fn mask_file_name(frame: u64) -> String {
    format!("frame_{frame:06}.pgm")
}
