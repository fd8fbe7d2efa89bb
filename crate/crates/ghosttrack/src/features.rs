//! Appearance feature files: one record per detection, renormalized to unit
//! length at load.
//!
//! Line format: `frame,det_index,d,v1,...,vd` where `det_index` is the
//! 0-based position of the detection within its frame (in detection-file
//! order). An absent file puts association into IoU-only mode.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Features keyed by (frame, detection index within the frame).
#[derive(Debug, Clone, Default)]
pub struct FeatureTable {
    features: BTreeMap<(u64, usize), Vec<f64>>,
}

impl FeatureTable {
    pub fn get(&self, frame: u64, det_index: usize) -> Option<&Vec<f64>> {
        self.features.get(&(frame, det_index))
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Number of feature records for one frame.
    pub fn count_for_frame(&self, frame: u64) -> usize {
        self.features.range((frame, 0)..=(frame, usize::MAX)).count()
    }
}

pub fn read_features(path: &Path) -> Result<FeatureTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = FeatureTable::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(Error::parse(path, line_no, "expected frame,det_index,d,v1,..."));
        }
        let frame: u64 =
            fields[0].trim().parse().map_err(|_| Error::parse(path, line_no, "bad frame"))?;
        let det_index: usize =
            fields[1].trim().parse().map_err(|_| Error::parse(path, line_no, "bad det_index"))?;
        let dim: usize =
            fields[2].trim().parse().map_err(|_| Error::parse(path, line_no, "bad dimension"))?;
        if fields.len() != 3 + dim {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {dim} vector entries, got {}", fields.len() - 3),
            ));
        }
        let mut v = Vec::with_capacity(dim);
        for s in &fields[3..] {
            let x: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad entry '{s}'")))?;
            if !x.is_finite() {
                return Err(Error::parse(path, line_no, format!("non-finite entry '{s}'")));
            }
            v.push(x);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::parse(path, line_no, "zero feature vector"));
        }
        for x in &mut v {
            *x /= norm;
        }
        if table.features.insert((frame, det_index), v).is_some() {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate feature for frame {frame} det {det_index}"),
            ));
        }
    }
    Ok(table)
}
