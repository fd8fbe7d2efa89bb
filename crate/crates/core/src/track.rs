//! Track state, lifecycle and egomotion compensation.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::geometry::{BBox, Warp};
use crate::kalman::{self, DepthAggregator, KalmanParams, TrackState, MEAS_DIM};

/// Appearance gallery capacity, most recent first.
const GALLERY_CAP: usize = 100;

/// Retained birds-eye states for external forecasters.
const TOPDOWN_CAP: usize = 16;

/// Consecutive hits before a tentative track is confirmed.
pub const CONFIRM_HITS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    /// Newly spawned; deleted on the first miss, confirmed after
    /// [`CONFIRM_HITS`] consecutive hits.
    Tentative,
    Visible,
    Occluded,
    Deleted,
}

/// One tracked person.
#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub state: TrackState,
    pub status: TrackStatus,
    /// Frames since the last matched detection; 0 iff matched this frame.
    pub time_since_update: u32,
    pub hits: u32,
    gallery: VecDeque<Vec<f64>>,
    pub depth_history: DepthAggregator,
    /// Recent (x, z) states from frames where the person was seen, oldest
    /// first; input for external trajectory forecasters.
    pub topdown_history: VecDeque<(f64, f64)>,
}

impl Track {
    pub fn new(
        id: u64,
        det: &BBox,
        gamma_obs: f64,
        params: &KalmanParams,
        depth_window: usize,
    ) -> Result<Self, crate::CoreError> {
        let state = kalman::init_state(det, gamma_obs, params)?;
        let mut depth_history = DepthAggregator::new(depth_window);
        depth_history.push(gamma_obs);
        Ok(Track {
            id,
            state,
            status: TrackStatus::Tentative,
            time_since_update: 0,
            hits: 1,
            gallery: VecDeque::new(),
            depth_history,
            topdown_history: VecDeque::new(),
        })
    }

    pub fn is_confirmed(&self) -> bool {
        matches!(self.status, TrackStatus::Visible | TrackStatus::Occluded)
    }

    pub fn bbox(&self) -> Result<BBox, crate::CoreError> {
        kalman::state_bbox(&self.state)
    }

    pub fn gamma(&self) -> f64 {
        kalman::state_gamma(&self.state)
    }

    /// Aggregated inverse depth driving the process noise; falls back to the
    /// state estimate when no depth was ever observed.
    pub fn gamma_hat(&self) -> f64 {
        self.depth_history.gamma_hat().unwrap_or_else(|_| self.gamma()).max(1e-9)
    }

    pub fn push_feature(&mut self, feature: Vec<f64>) {
        if self.gallery.len() == GALLERY_CAP {
            self.gallery.pop_back();
        }
        self.gallery.push_front(feature);
    }

    pub fn gallery(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.gallery.iter()
    }

    pub fn has_features(&self) -> bool {
        !self.gallery.is_empty()
    }

    /// Record the current (x, z) state as an observed birds-eye point.
    pub fn push_topdown(&mut self) {
        if self.topdown_history.len() == TOPDOWN_CAP {
            self.topdown_history.pop_front();
        }
        let z = 1.0 / self.gamma().max(1e-9);
        self.topdown_history.push_back((self.state.mean[0], z));
    }
}

/// Map a track's position and velocities through an egomotion warp.
///
/// The mean's (x, y) goes through the homography; velocities transform by the
/// local Jacobian; the covariance is left untouched. A near-singular warp
/// falls back to the identity with a warning.
pub fn apply_warp(track: &mut Track, w: &Warp) {
    if w.is_identity() {
        return;
    }
    if w.det().abs() < 1e-12 {
        log::warn!("near-singular warp for track {}; using identity", track.id);
        return;
    }
    let m = &mut track.state.mean;
    let (x, y) = (m[0], m[1]);
    let (nx, ny) = w.apply(x, y);
    let j = w.jacobian(x, y);
    let (vx, vy) = (m[MEAS_DIM], m[MEAS_DIM + 1]);
    m[0] = nx;
    m[1] = ny;
    m[MEAS_DIM] = j[0][0] * vx + j[0][1] * vy;
    m[MEAS_DIM + 1] = j[1][0] * vx + j[1][1] * vy;
}
