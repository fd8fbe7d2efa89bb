//! MOT Challenge text files: ground truth, detections, and tracker output,
//! plus the JSON-lines hypothesis format that carries Top-k boxes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ghosttrack_core::geometry::BBox;
use ghosttrack_core::records::{DetBox, GtBox, PredEntry, SequenceDet, SequenceGt, SequencePred};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn parse_f64(path: &Path, line_no: usize, field: &str, s: &str) -> Result<f64> {
    let v: f64 =
        s.trim().parse().map_err(|_| Error::parse(path, line_no, format!("bad {field}: '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line_no, format!("non-finite {field}: '{s}'")));
    }
    Ok(v)
}

fn parse_box(path: &Path, line_no: usize, f: &[&str]) -> Result<BBox> {
    let l = parse_f64(path, line_no, "left", f[2])?;
    let t = parse_f64(path, line_no, "top", f[3])?;
    let w = parse_f64(path, line_no, "width", f[4])?;
    let h = parse_f64(path, line_no, "height", f[5])?;
    BBox::from_tlwh(l, t, w, h).map_err(|e| Error::parse(path, line_no, e.to_string()))
}

/// Read MOT ground truth: `frame,id,left,top,width,height,conf,class,visibility`.
///
/// Rows flagged "do not consider" (conf 0) and non-pedestrian classes are
/// dropped.
pub fn read_mot_gt(path: &Path) -> Result<SequenceGt> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut gt = SequenceGt::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 9 {
            return Err(Error::parse(path, line_no, format!("expected 9 fields, got {}", f.len())));
        }
        let frame: u64 =
            f[0].trim().parse().map_err(|_| Error::parse(path, line_no, "bad frame index"))?;
        let id: u64 =
            f[1].trim().parse().map_err(|_| Error::parse(path, line_no, "bad track id"))?;
        let bbox = parse_box(path, line_no, &f)?;
        let conf = parse_f64(path, line_no, "conf", f[6])?;
        let class: u32 =
            f[7].trim().parse().map_err(|_| Error::parse(path, line_no, "bad class"))?;
        let visibility = parse_f64(path, line_no, "visibility", f[8])?;
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::parse(
                path,
                line_no,
                format!("visibility {visibility} outside [0, 1]"),
            ));
        }
        if conf == 0.0 || class != 1 {
            continue;
        }
        gt.boxes.push(GtBox { frame, id, bbox, visibility, class });
    }
    Ok(gt)
}

/// Read MOT detections: `frame,-1,left,top,width,height,conf,...`, dropping
/// rows with confidence below `min_confidence`.
pub fn read_mot_det(path: &Path, min_confidence: f64) -> Result<SequenceDet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut det = SequenceDet::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 7 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 7+ fields, got {}", f.len()),
            ));
        }
        let frame: u64 =
            f[0].trim().parse().map_err(|_| Error::parse(path, line_no, "bad frame index"))?;
        let bbox = parse_box(path, line_no, &f)?;
        let confidence = parse_f64(path, line_no, "conf", f[6])?;
        if confidence < min_confidence {
            continue;
        }
        det.boxes.push(DetBox { frame, bbox, confidence });
    }
    det.boxes.sort_by_key(|b| b.frame);
    Ok(det)
}

/// Write ground truth in the MOT convention (boxes at 2 decimal places).
pub fn write_mot_gt(path: &Path, gt: &SequenceGt) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut boxes: Vec<&GtBox> = gt.boxes.iter().collect();
    boxes.sort_by_key(|b| (b.frame, b.id));
    for b in boxes {
        let (l, t, w, h) = b.bbox.to_tlwh();
        writeln!(
            out,
            "{},{},{l:.2},{t:.2},{w:.2},{h:.2},1,{},{:.6}",
            b.frame, b.id, b.class, b.visibility
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Write detections in the MOT convention.
pub fn write_mot_det(path: &Path, det: &SequenceDet) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for b in &det.boxes {
        let (l, t, w, h) = b.bbox.to_tlwh();
        writeln!(
            out,
            "{frame},-1,{l:.2},{t:.2},{w:.2},{h:.2},{conf:.4},-1,-1,-1",
            frame = b.frame,
            conf = b.confidence
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct HypLine {
    frame: u64,
    id: u64,
    occluded: bool,
    gamma: Option<f64>,
    /// Hypothesis boxes in tlwh order.
    hyps: Vec<[f64; 4]>,
}

/// Write tracker output: the MOT result text with Top-1 boxes and the
/// JSON-lines file carrying every hypothesis box.
pub fn write_predictions(pred: &SequencePred, txt_path: &Path, hyp_path: &Path) -> Result<()> {
    let file = fs::File::create(txt_path).map_err(|e| Error::io(txt_path, e))?;
    let mut out = BufWriter::new(file);
    for e in &pred.entries {
        let (l, t, w, h) = e.top1().to_tlwh();
        writeln!(out, "{},{},{l:.2},{t:.2},{w:.2},{h:.2},1,-1,-1,-1", e.frame, e.id)
            .map_err(|e| Error::io(txt_path, e))?;
    }
    out.flush().map_err(|e| Error::io(txt_path, e))?;

    let file = fs::File::create(hyp_path).map_err(|e| Error::io(hyp_path, e))?;
    let mut out = BufWriter::new(file);
    for e in &pred.entries {
        let line = HypLine {
            frame: e.frame,
            id: e.id,
            occluded: e.occluded,
            gamma: e.gamma,
            hyps: e
                .hyps
                .iter()
                .map(|b| {
                    let (l, t, w, h) = b.to_tlwh();
                    [l, t, w, h]
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &line)
            .map_err(|err| Error::format(hyp_path, err.to_string()))?;
        out.write_all(b"\n").map_err(|e| Error::io(hyp_path, e))?;
    }
    out.flush().map_err(|e| Error::io(hyp_path, e))
}

/// Read the JSON-lines hypothesis file back into a prediction record.
pub fn read_hyp(path: &Path) -> Result<SequencePred> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pred = SequencePred::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let h: HypLine =
            serde_json::from_str(line).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        if h.hyps.is_empty() {
            return Err(Error::parse(path, line_no, "empty hypothesis set"));
        }
        let mut hyps = Vec::with_capacity(h.hyps.len());
        for [l, t, w, hh] in h.hyps {
            if ![l, t, w, hh].iter().all(|v| v.is_finite()) {
                return Err(Error::parse(path, line_no, "non-finite hypothesis box"));
            }
            hyps.push(
                BBox::from_tlwh(l, t, w, hh)
                    .map_err(|e| Error::parse(path, line_no, e.to_string()))?,
            );
        }
        pred.entries.push(PredEntry {
            frame: h.frame,
            id: h.id,
            occluded: h.occluded,
            gamma: h.gamma,
            hyps,
        });
    }
    pred.entries.sort_by_key(|e| (e.frame, e.id));
    Ok(pred)
}


/// Read tracker output in the MOT result convention
/// (`frame,id,left,top,width,height,...`) as Top-1 predictions.
pub fn read_mot_tracks(path: &Path) -> Result<SequencePred> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pred = SequencePred::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 6 {
            return Err(Error::parse(path, line_no, format!("expected 6+ fields, got {}", f.len())));
        }
        let frame: u64 =
            f[0].trim().parse().map_err(|_| Error::parse(path, line_no, "bad frame index"))?;
        let id: u64 =
            f[1].trim().parse().map_err(|_| Error::parse(path, line_no, "bad track id"))?;
        let bbox = parse_box(path, line_no, &f)?;
        pred.entries.push(PredEntry { frame, id, occluded: false, gamma: None, hyps: vec![bbox] });
    }
    pred.entries.sort_by_key(|e| (e.frame, e.id));
    Ok(pred)
}

#[cfg(test)]
mod det_round_trip {
    use super::*;
    use ghosttrack_core::records::DetBox;

    #[test]
    fn det_write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("det.txt");
        let det = SequenceDet {
            boxes: vec![
                DetBox {
                    frame: 1,
                    bbox: BBox::new(30.125, 40.5, 0.5, 22.0).unwrap(),
                    confidence: 0.875,
                },
                DetBox {
                    frame: 2,
                    bbox: BBox::new(31.0, 41.0, 0.5, 22.5).unwrap(),
                    confidence: 1.0,
                },
            ],
        };
        write_mot_det(&p, &det).unwrap();
        let back = read_mot_det(&p, 0.0).unwrap();
        assert_eq!(back.boxes.len(), 2);
        for (a, b) in det.boxes.iter().zip(&back.boxes) {
            assert_eq!(a.frame, b.frame);
            let (al, at, aw, ah) = a.bbox.to_tlwh();
            let (bl, bt, bw, bh) = b.bbox.to_tlwh();
            assert!((al - bl).abs() < 0.005 + 1e-9);
            assert!((at - bt).abs() < 0.005 + 1e-9);
            assert!((aw - bw).abs() < 0.01 + 1e-9);
            assert!((ah - bh).abs() < 0.01 + 1e-9);
            assert!((a.confidence - b.confidence).abs() < 5e-5);
        }
    }
}
