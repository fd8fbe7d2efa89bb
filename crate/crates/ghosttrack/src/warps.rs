//! Egomotion warp files: one 3x3 matrix per frame, row-major, mapping the
//! previous frame's pixel coordinates into the current frame.
//!
//! Line format: `frame w11 w12 w13 w21 w22 w23 w31 w32 w33`. Frames without
//! a line get the identity; an absent file means a static camera.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ghosttrack_core::geometry::Warp;

use crate::error::{Error, Result};

/// Frame-indexed warps; `get` yields the identity for unlisted frames.
#[derive(Debug, Clone, Default)]
pub struct WarpTable {
    warps: BTreeMap<u64, Warp>,
}

impl WarpTable {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn get(&self, frame: u64) -> Warp {
        self.warps.get(&frame).copied().unwrap_or_else(Warp::identity)
    }

    pub fn insert(&mut self, frame: u64, warp: Warp) {
        self.warps.insert(frame, warp);
    }

    pub fn is_empty(&self) -> bool {
        self.warps.is_empty()
    }
}

/// Load a warp file; every matrix must be invertible.
pub fn read_warps(path: &Path) -> Result<WarpTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = WarpTable::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 10 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 10 fields, got {}", fields.len()),
            ));
        }
        let frame: u64 =
            fields[0].parse().map_err(|_| Error::parse(path, line_no, "bad frame index"))?;
        let mut m = [[0.0f64; 3]; 3];
        for (k, s) in fields[1..].iter().enumerate() {
            let v: f64 =
                s.parse().map_err(|_| Error::parse(path, line_no, format!("bad entry '{s}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, line_no, format!("non-finite entry '{s}'")));
            }
            m[k / 3][k % 3] = v;
        }
        let warp = Warp(m);
        if warp.det().abs() < 1e-12 {
            return Err(Error::parse(path, line_no, "non-invertible warp matrix"));
        }
        table.insert(frame, warp);
    }
    Ok(table)
}

/// Write a warp file covering frames 2..=n (frame 1 has no predecessor).
pub fn write_warps(path: &Path, warps: &[(u64, Warp)]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (frame, w) in warps {
        let m = &w.0;
        writeln!(
            out,
            "{frame} {} {} {} {} {} {} {} {} {}",
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
