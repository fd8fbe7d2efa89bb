//! Occlusion-aware online multi-object tracking in 3D from monocular cues.
//!
//! People that walk behind occluders do not stop existing. This crate keeps them
//! alive as short-term forecasts: every track carries a constant-velocity Kalman
//! filter whose state is augmented with inverse depth, so forecasts live in 3D
//! and can be checked against the per-frame freespace horizon computed from a
//! dense depth raster. Forecasts that land in observed freespace are suppressed
//! or deleted; forecasts beyond the horizon are reported as occluded people,
//! optionally with a set of k sampled location hypotheses.
//!
//! The crate is `no_std` (with `alloc`) and performs no I/O: depth rasters,
//! detections, egomotion warps and appearance features arrive as in-memory
//! values. The companion `ghosttrack` crate supplies file formats and a CLI.
//!
//! Main pieces:
//!
//! * [`geometry`] — boxes, cylinders, pinhole projection;
//! * [`depth`] — depth rasters, region inverse depth, freespace verdicts;
//! * [`kalman`] — the inverse-depth Kalman filter with depth-scaled noise;
//! * [`assoc`] — appearance/IoU association with Mahalanobis gating;
//! * [`tracker`] — the per-frame tracking loop and track lifecycle;
//! * [`hypo`] — Top-k hypothesis sampling (freespace-aware and baseline);
//! * [`metrics`] — Top-k F1, IDF1 and MOTA with occluded-only accounting;
//! * [`synth`] — a deterministic synthetic world generator for testing.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assoc;
pub mod config;
pub mod depth;
pub mod error;
pub mod geometry;
pub mod hypo;
pub mod kalman;
pub mod metrics;
pub mod records;
pub mod synth;
pub mod track;
pub mod tracker;

pub use config::Config;
pub use error::CoreError;
pub use geometry::{iou, BBox, CameraModel, Cylinder3D};
