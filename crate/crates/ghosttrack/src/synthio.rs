//! Scenario files (JSON) and writing rendered scenes as sequence directories.

use std::fs;
use std::path::Path;

use ghosttrack_core::geometry::{CameraModel, Cylinder3D};
use ghosttrack_core::synth::{render, DetectorModel, OccluderSpec, Rendered, Scenario, WalkerSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mot::{write_mot_det, write_mot_gt};
use crate::pfm::{depth_file_name, mask_file_name, write_pfm, write_pgm_mask};
use crate::sequence::{write_seqinfo, SequenceSource};
use crate::warps::write_warps;

#[derive(Serialize, Deserialize)]
struct CameraFile {
    focal: f64,
    /// Principal point; defaults to the image center.
    #[serde(default)]
    principal: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct WalkerFile {
    start: CylinderFile,
    velocity: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct CylinderFile {
    x: f64,
    y: f64,
    z: f64,
    height: f64,
    aspect: f64,
}

#[derive(Serialize, Deserialize)]
struct OccluderFile {
    x: [f64; 2],
    y: [f64; 2],
    z: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct DetectorFile {
    #[serde(default = "default_min_visibility")]
    min_visibility: f64,
    #[serde(default)]
    miss_rate: f64,
    #[serde(default)]
    center_noise_px: f64,
    #[serde(default)]
    height_noise_px: f64,
}

fn default_min_visibility() -> f64 {
    0.5
}

impl Default for DetectorFile {
    fn default() -> Self {
        DetectorFile {
            min_visibility: default_min_visibility(),
            miss_rate: 0.0,
            center_noise_px: 0.0,
            height_noise_px: 0.0,
        }
    }
}

/// On-disk scenario schema; see `scenarios/demo.json` for a worked example.
#[derive(Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub frames: u64,
    #[serde(default = "default_fps")]
    pub fps: u32,
    camera: Option<CameraFile>,
    pub background_depth: f64,
    walkers: Vec<WalkerFile>,
    #[serde(default)]
    occluders: Vec<OccluderFile>,
    #[serde(default)]
    detector: Option<DetectorFile>,
    #[serde(default)]
    pan: Vec<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
}

fn default_fps() -> u32 {
    30
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    scenario_from_file(file).map_err(|msg| Error::format(path, msg))
}

fn scenario_from_file(f: ScenarioFile) -> std::result::Result<Scenario, String> {
    let camera = match f.camera {
        Some(c) => CameraModel::new(
            c.focal,
            c.principal
                .map(|p| (p[0], p[1]))
                .unwrap_or((f.width as f64 / 2.0, f.height as f64 / 2.0)),
        )
        .map_err(|e| e.to_string())?,
        None => CameraModel::from_image_size(f.width, f.height),
    };
    let mut walkers = Vec::with_capacity(f.walkers.len());
    for w in f.walkers {
        walkers.push(WalkerSpec {
            start: Cylinder3D::new(w.start.x, w.start.y, w.start.z, w.start.height, w.start.aspect)
                .map_err(|e| e.to_string())?,
            velocity: w.velocity,
        });
    }
    let d = f.detector.unwrap_or_default();
    Ok(Scenario {
        name: f.name,
        camera,
        width: f.width,
        height: f.height,
        frames: f.frames,
        fps: f.fps,
        background_depth: f.background_depth,
        walkers,
        occluders: f
            .occluders
            .into_iter()
            .map(|o| OccluderSpec { x: o.x, y: o.y, z: o.z })
            .collect(),
        detector: DetectorModel {
            min_visibility: d.min_visibility,
            miss_rate: d.miss_rate,
            center_noise_px: d.center_noise_px,
            height_noise_px: d.height_noise_px,
        },
        pan: f.pan,
        seed: f.seed,
    })
}

/// Render a scenario and write it as a complete sequence directory.
pub fn write_rendered(sc: &Scenario, out_dir: &Path) -> Result<SequenceSource> {
    let rendered = render(sc)?;
    write_sequence_dir(sc, &rendered, out_dir)
}

/// Write pre-rendered output as a sequence directory (gt, det, depth, warps,
/// seqinfo). The warp file is only written for moving-camera scenarios.
pub fn write_sequence_dir(
    sc: &Scenario,
    rendered: &Rendered,
    out_dir: &Path,
) -> Result<SequenceSource> {
    for sub in ["gt", "det", "depth", "masks"] {
        fs::create_dir_all(out_dir.join(sub)).map_err(|e| Error::io(out_dir, e))?;
    }
    let src = SequenceSource {
        root: out_dir.to_path_buf(),
        name: sc.name.clone(),
        width: sc.width,
        height: sc.height,
        frames: sc.frames,
        fps: sc.fps,
    };
    write_seqinfo(&src)?;
    write_mot_gt(&out_dir.join("gt").join("gt.txt"), &rendered.gt)?;
    write_mot_det(&out_dir.join("det").join("det.txt"), &rendered.detections)?;
    for (i, frame) in rendered.frames.iter().enumerate() {
        let f = i as u64 + 1;
        write_pfm(&out_dir.join("depth").join(depth_file_name(f)), &frame.depth)?;
        write_pgm_mask(
            &out_dir.join("masks").join(mask_file_name(f)),
            sc.width,
            sc.height,
            &frame.mask,
        )?;
    }
    if !sc.pan.is_empty() {
        let rows: Vec<(u64, ghosttrack_core::geometry::Warp)> = rendered
            .frames
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, fr)| (i as u64 + 1, fr.warp))
            .collect();
        write_warps(&out_dir.join("warps.txt"), &rows)?;
    }
    Ok(src)
}
