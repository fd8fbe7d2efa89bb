//! File formats, sequence running, evaluation reports, plots and the CLI for
//! the occlusion-aware tracking pipeline in `ghosttrack-core`.
//!
//! A sequence lives in a directory with MOT-style text annotations, one PFM
//! depth raster per frame and optional warp/feature/mask side files; see
//! FORMATS.md at the repository root for the byte-level contracts.

pub mod config_file;
pub mod error;
pub mod features;
pub mod mot;
pub mod pfm;
pub mod plot;
pub mod report;
pub mod sequence;
pub mod synthio;
pub mod warps;

pub use error::Error;
