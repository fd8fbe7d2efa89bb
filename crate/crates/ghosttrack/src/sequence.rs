//! Sequence directories: discovery, metadata and the streaming tracker run.
//!
//! Layout per sequence:
//!
//! ```text
//! <seq>/
//!   seqinfo.ini          optional metadata (else inferred)
//!   det/det.txt          detections (required for tracking)
//!   gt/gt.txt            ground truth (required for evaluation)
//!   depth/frame_%06d.pfm one depth raster per frame
//!   masks/frame_%06d.pgm optional person masks
//!   warps.txt            optional egomotion warps
//!   features.txt         optional appearance features
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ghosttrack_core::assoc::Detection;
use ghosttrack_core::records::{SequenceDet, SequenceGt, SequencePred};
use ghosttrack_core::tracker::{collect_predictions, FrameInput, Tracker};
use ghosttrack_core::Config;

use crate::error::{Error, Result};
use crate::features::{read_features, FeatureTable};
use crate::mot::{read_mot_det, read_mot_gt};
use crate::pfm::{depth_file_name, mask_file_name, read_pfm, read_pgm_mask};
use crate::warps::{read_warps, WarpTable};

/// One sequence on disk with its resolved metadata.
#[derive(Debug, Clone)]
pub struct SequenceSource {
    pub root: PathBuf,
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub frames: u64,
    pub fps: u32,
}

impl SequenceSource {
    /// Open a sequence directory, reading `seqinfo.ini` when present and
    /// inferring image size (from the first depth raster) and frame count
    /// (from the annotation files) otherwise.
    pub fn open(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::format(root, "not a sequence directory"));
        }
        let name = root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sequence".into());
        let ini = root.join("seqinfo.ini");
        let mut width = 0u32;
        let mut height = 0u32;
        let mut frames = 0u64;
        let mut fps = 30u32;
        let mut ini_name = None;
        if ini.is_file() {
            let text = fs::read_to_string(&ini).map_err(|e| Error::io(&ini, e))?;
            for line in text.lines() {
                let line = line.trim();
                if let Some((k, v)) = line.split_once('=') {
                    let v = v.trim();
                    match k.trim() {
                        "name" => ini_name = Some(v.to_string()),
                        "imWidth" => width = v.parse().unwrap_or(0),
                        "imHeight" => height = v.parse().unwrap_or(0),
                        "seqLength" => frames = v.parse().unwrap_or(0),
                        "frameRate" => fps = v.parse().unwrap_or(30),
                        _ => {}
                    }
                }
            }
        }
        if width == 0 || height == 0 {
            let first = root.join("depth").join(depth_file_name(1));
            if first.is_file() {
                let d = read_pfm(&first, 1)?;
                width = d.width();
                height = d.height();
            }
        }
        if frames == 0 {
            for rel in ["gt/gt.txt", "det/det.txt"] {
                let p = root.join(rel);
                if p.is_file() {
                    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    for line in text.lines() {
                        if let Some(first) = line.split(',').next() {
                            if let Ok(f) = first.trim().parse::<u64>() {
                                frames = frames.max(f);
                            }
                        }
                    }
                }
            }
        }
        if width == 0 || height == 0 {
            return Err(Error::format(
                root,
                "cannot determine image size (no seqinfo.ini, no depth rasters)",
            ));
        }
        if frames == 0 {
            return Err(Error::format(
                root,
                "cannot determine frame count (no seqinfo.ini, empty annotations)",
            ));
        }
        Ok(SequenceSource {
            root: root.to_path_buf(),
            name: ini_name.unwrap_or(name),
            width,
            height,
            frames,
            fps,
        })
    }

    pub fn det_path(&self) -> PathBuf {
        self.root.join("det").join("det.txt")
    }

    pub fn gt_path(&self) -> PathBuf {
        self.root.join("gt").join("gt.txt")
    }

    pub fn depth_path(&self, frame: u64) -> PathBuf {
        self.root.join("depth").join(depth_file_name(frame))
    }

    pub fn mask_path(&self, frame: u64) -> PathBuf {
        self.root.join("masks").join(mask_file_name(frame))
    }

    pub fn warps_path(&self) -> PathBuf {
        self.root.join("warps.txt")
    }

    pub fn features_path(&self) -> PathBuf {
        self.root.join("features.txt")
    }

    pub fn read_gt(&self) -> Result<SequenceGt> {
        read_mot_gt(&self.gt_path())
    }

    pub fn read_det(&self, min_confidence: f64) -> Result<SequenceDet> {
        read_mot_det(&self.det_path(), min_confidence)
    }
}

/// Write a `seqinfo.ini` for a sequence directory.
pub fn write_seqinfo(src: &SequenceSource) -> Result<()> {
    let p = src.root.join("seqinfo.ini");
    let text = format!(
        "[Sequence]\nname={}\nimDir=img1\nframeRate={}\nseqLength={}\nimWidth={}\nimHeight={}\nimExt=.jpg\n",
        src.name, src.fps, src.frames, src.width, src.height
    );
    fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

/// Run the tracker over a sequence directory, streaming frame by frame.
///
/// All I/O failures carry the frame they happened at. The output is
/// deterministic for a fixed config and seed.
pub fn run_sequence(src: &SequenceSource, cfg: &Config) -> Result<SequencePred> {
    let outputs = run_sequence_outputs(src, cfg)?;
    Ok(collect_predictions(&src.name, &outputs))
}

/// [`run_sequence`] keeping the raw per-frame outputs (with state
/// covariances), as consumed by the top-down plot.
pub fn run_sequence_outputs(
    src: &SequenceSource,
    cfg: &Config,
) -> Result<Vec<ghosttrack_core::tracker::FrameOutput>> {
    let det = src.read_det(cfg.min_confidence)?;
    let mut det_by_frame: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, b) in det.boxes.iter().enumerate() {
        det_by_frame.entry(b.frame).or_default().push(i);
    }

    let features = if src.features_path().is_file() {
        read_features(&src.features_path())?
    } else {
        FeatureTable::default()
    };
    // a features file must describe every detection of the frames it covers
    if !features.is_empty() {
        for (frame, idx) in &det_by_frame {
            let have = features.count_for_frame(*frame);
            if have != 0 && have != idx.len() {
                return Err(Error::format(
                    src.features_path(),
                    format!("frame {frame}: {have} features for {} detections", idx.len()),
                ));
            }
        }
    }

    let warps = if src.warps_path().is_file() {
        read_warps(&src.warps_path())?
    } else {
        WarpTable::identity()
    };

    let mut tracker = Tracker::new(cfg.clone(), src.width as f64)?;
    let mut outputs = Vec::with_capacity(src.frames as usize);
    for frame in 1..=src.frames {
        let depth = if cfg.depth_disabled {
            None
        } else {
            let p = src.depth_path(frame);
            Some(read_pfm(&p, frame).map_err(|e| Error::at_frame(frame, e))?)
        };
        let mask = if !cfg.depth_disabled && src.mask_path(frame).is_file() {
            Some(read_pgm_mask(&src.mask_path(frame)).map_err(|e| Error::at_frame(frame, e))?)
        } else {
            None
        };
        let detections: Vec<Detection> = det_by_frame
            .get(&frame)
            .map(|idx| {
                idx.iter()
                    .enumerate()
                    .map(|(j, &i)| Detection {
                        bbox: det.boxes[i].bbox,
                        gamma: None,
                        feature: features.get(frame, j).cloned(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let input = FrameInput {
            frame,
            detections,
            depth: depth.as_ref(),
            mask: mask.as_ref(),
            warp: warps.get(frame),
        };
        let out = tracker.step(&input).map_err(|e| Error::at_frame(frame, e.into()))?;
        outputs.push(out);
    }
    Ok(outputs)
}
