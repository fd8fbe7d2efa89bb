//! Flat key=value configuration files and CLI overrides.
//!
//! Every tunable of the pipeline has exactly one key here; unknown keys are
//! rejected. `focal = auto` selects the image-width fallback. The seed can
//! additionally be overridden through the `GHOSTTRACK_SEED` environment
//! variable.

use std::fs;
use std::path::Path;

use ghosttrack_core::Config;

use crate::error::{Error, Result};

/// Apply one `key=value` assignment to a config.
pub fn apply_assignment(cfg: &mut Config, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    let bad = |what: &str| Error::Config(format!("bad value '{v}' for {what}"));
    match key.trim() {
        "alpha_iou" => cfg.alpha_iou = v.parse().map_err(|_| bad("alpha_iou"))?,
        "k" => cfg.k = v.parse().map_err(|_| bad("k"))?,
        "n_age" => cfg.n_age = v.parse().map_err(|_| bad("n_age"))?,
        "alpha_supp" => cfg.alpha_supp = v.parse().map_err(|_| bad("alpha_supp"))?,
        "alpha_delete" => cfg.alpha_delete = v.parse().map_err(|_| bad("alpha_delete"))?,
        "f_process" => cfg.f_process = v.parse().map_err(|_| bad("f_process"))?,
        "f_observation" => cfg.f_observation = v.parse().map_err(|_| bad("f_observation"))?,
        "v_thresh" => cfg.v_thresh = v.parse().map_err(|_| bad("v_thresh"))?,
        "min_iou" => cfg.min_iou = v.parse().map_err(|_| bad("min_iou"))?,
        "sigma_gamma" => cfg.sigma_gamma = v.parse().map_err(|_| bad("sigma_gamma"))?,
        "depth_window" => cfg.depth_window = v.parse().map_err(|_| bad("depth_window"))?,
        "s_x" => cfg.s_x = v.parse().map_err(|_| bad("s_x"))?,
        "s_y" => cfg.s_y = v.parse().map_err(|_| bad("s_y"))?,
        "seed" => cfg.seed = v.parse().map_err(|_| bad("seed"))?,
        "depth_disabled" => cfg.depth_disabled = v.parse().map_err(|_| bad("depth_disabled"))?,
        "report_occluded" => cfg.report_occluded = v.parse().map_err(|_| bad("report_occluded"))?,
        "freespace" => cfg.freespace = v.parse().map_err(|_| bad("freespace"))?,
        "depth_noise" => cfg.depth_noise = v.parse().map_err(|_| bad("depth_noise"))?,
        "gate_gamma" => cfg.gate_gamma = v.parse().map_err(|_| bad("gate_gamma"))?,
        "min_confidence" => cfg.min_confidence = v.parse().map_err(|_| bad("min_confidence"))?,
        "focal" => {
            cfg.focal = if v == "auto" { None } else { Some(v.parse().map_err(|_| bad("focal"))?) }
        }
        other => return Err(Error::Config(format!("unknown config key '{other}'"))),
    }
    Ok(())
}

/// Read a config file on top of the defaults.
pub fn read_config(path: &Path) -> Result<Config> {
    let mut cfg = Config::default();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, i + 1, "expected key = value"))?;
        apply_assignment(&mut cfg, key, value)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
    }
    Ok(cfg)
}

/// Resolve the effective config: file, then `--set` overrides, then the
/// `GHOSTTRACK_SEED` environment variable.
pub fn resolve_config(file: Option<&Path>, overrides: &[String]) -> Result<Config> {
    let mut cfg = match file {
        Some(p) => read_config(p)?,
        None => Config::default(),
    };
    for assignment in overrides {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        apply_assignment(&mut cfg, key, value)?;
    }
    if let Ok(seed) = std::env::var("GHOSTTRACK_SEED") {
        cfg.seed = seed
            .parse()
            .map_err(|_| Error::Config(format!("GHOSTTRACK_SEED '{seed}' is not an integer")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The resolved config as reproducible `key = value` lines.
pub fn render_config(cfg: &Config) -> String {
    let focal = match cfg.focal {
        Some(f) => format!("{f}"),
        None => "auto".into(),
    };
    format!(
        "alpha_iou = {}\nk = {}\nn_age = {}\nalpha_supp = {}\nalpha_delete = {}\n\
         f_process = {}\nf_observation = {}\nv_thresh = {}\nmin_iou = {}\nsigma_gamma = {}\n\
         depth_window = {}\ns_x = {}\ns_y = {}\nseed = {}\ndepth_disabled = {}\n\
         report_occluded = {}\nfreespace = {}\ndepth_noise = {}\ngate_gamma = {}\n\
         min_confidence = {}\nfocal = {}\n",
        cfg.alpha_iou,
        cfg.k,
        cfg.n_age,
        cfg.alpha_supp,
        cfg.alpha_delete,
        cfg.f_process,
        cfg.f_observation,
        cfg.v_thresh,
        cfg.min_iou,
        cfg.sigma_gamma,
        cfg.depth_window,
        cfg.s_x,
        cfg.s_y,
        cfg.seed,
        cfg.depth_disabled,
        cfg.report_occluded,
        cfg.freespace,
        cfg.depth_noise,
        cfg.gate_gamma,
        cfg.min_confidence,
        focal,
    )
}
