//! Tracker and evaluation tunables.
//!
//! Every constant of the pipeline has exactly one home here. The std crate
//! layers a key=value config file and CLI overrides on top of these defaults.

/// All pipeline tunables with their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Minimum IoU for a ground-truth box to match a prediction during evaluation.
    pub alpha_iou: f64,
    /// Number of hypothesis boxes reported per person.
    pub k: usize,
    /// Maximum consecutive unmatched frames before a track is deleted.
    pub n_age: u32,
    /// Forecast depth below `alpha_supp * z_o` suppresses the report for the frame.
    pub alpha_supp: f64,
    /// Forecast depth below `alpha_delete * z_o` deletes the track.
    pub alpha_delete: f64,
    /// Depth-scaled process noise coefficient (pixels per unit inverse depth).
    pub f_process: f64,
    /// Depth-scaled observation noise coefficient (pixels per unit inverse depth).
    pub f_observation: f64,
    /// Ground-truth visibility below this is counted as occluded.
    pub v_thresh: f64,
    /// Minimum IoU for stage-2 detection-to-track matching.
    pub min_iou: f64,
    /// Observation noise std of inverse depth.
    pub sigma_gamma: f64,
    /// Window of the running median over past inverse-depth values.
    pub depth_window: usize,
    /// Baseline hypothesis spread along x, as a fraction of box height.
    pub s_x: f64,
    /// Baseline hypothesis spread along y, as a fraction of box height.
    pub s_y: f64,
    /// Seed for all stochastic sampling.
    pub seed: u64,
    /// Disable all depth use (top-down sequences): no depth measurements,
    /// no freespace filtering, height-scaled noise.
    pub depth_disabled: bool,
    /// Report forecasts of unmatched tracks (occluded people). Off reduces the
    /// tracker to its visible-only baseline behaviour.
    pub report_occluded: bool,
    /// Apply freespace suppression/deletion to unmatched forecasts.
    pub freespace: bool,
    /// Scale process noise by aggregated inverse depth instead of box height.
    pub depth_noise: bool,
    /// Include inverse depth in the Mahalanobis gate (5 dof); off gates on the
    /// 4-dim box measurement only.
    pub gate_gamma: bool,
    /// Drop detections with confidence below this value.
    pub min_confidence: f64,
    /// Focal length in pixels; `None` falls back to the image width.
    pub focal: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            alpha_iou: 0.5,
            k: 5,
            n_age: 30,
            alpha_supp: 1.06,
            alpha_delete: 0.88,
            f_process: 900.0,
            f_observation: 600.0,
            v_thresh: 0.10,
            min_iou: 0.3,
            sigma_gamma: 0.01,
            depth_window: 15,
            s_x: 0.25,
            s_y: 0.10,
            seed: 0,
            depth_disabled: false,
            report_occluded: true,
            freespace: true,
            depth_noise: true,
            gate_gamma: true,
            min_confidence: 0.0,
            focal: None,
        }
    }
}

impl Config {
    /// Check the cross-field invariants.
    pub fn validate(&self) -> Result<(), crate::CoreError> {
        use crate::CoreError::InvalidParameter;
        if !(self.alpha_delete < self.alpha_supp) {
            return Err(InvalidParameter("alpha_delete must be < alpha_supp"));
        }
        if self.k == 0 {
            return Err(InvalidParameter("k must be >= 1"));
        }
        for (v, name) in [
            (self.alpha_iou, "alpha_iou"),
            (self.alpha_supp, "alpha_supp"),
            (self.alpha_delete, "alpha_delete"),
            (self.f_process, "f_process"),
            (self.f_observation, "f_observation"),
            (self.min_iou, "min_iou"),
            (self.sigma_gamma, "sigma_gamma"),
        ] {
            if !(v.is_finite() && v > 0.0) {
                let _ = name;
                return Err(InvalidParameter("numeric tunables must be positive"));
            }
        }
        if self.s_x < 0.0 || self.s_y < 0.0 {
            return Err(InvalidParameter("baseline spreads must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.v_thresh) {
            return Err(InvalidParameter("v_thresh must lie in [0, 1]"));
        }
        if self.depth_window == 0 {
            return Err(InvalidParameter("depth_window must be >= 1"));
        }
        if let Some(f) = self.focal {
            if !(f.is_finite() && f > 0.0) {
                return Err(InvalidParameter("focal must be positive"));
            }
        }
        Ok(())
    }
}
