//! Constant-velocity Kalman filter augmented with inverse depth.
//!
//! The state is the 10-vector
//! `[x, y, gamma, a, h, x', y', gamma', a', h']` where x, y, h are in pixels,
//! `gamma = 1/Z` is inverse depth in relative units and primes are per-frame
//! rates. Working in image coordinates keeps the dynamics linear; the 3D
//! constant-velocity assumption survives as process noise whose standard
//! deviation scales with the object's estimated inverse depth, so far-away
//! people get smoother tracks than nearby ones.
//!
//! Measurements are detected boxes plus the mean inverse depth observed over
//! the box. When no depth raster is available the depth row of the observation
//! drops out and the filter updates on the box alone.

use alloc::collections::VecDeque;
use nalgebra::{SMatrix, SVector};

use crate::error::CoreError;
use crate::geometry::BBox;

pub const MEAS_DIM: usize = 5;
pub const STATE_DIM: usize = 2 * MEAS_DIM;

/// Indices into the state mean.
const IX: usize = 0;
const IY: usize = 1;
const IG: usize = 2;
const IA: usize = 3;
const IH: usize = 4;

/// Observation std of the aspect ratio, independent of depth and height.
const ASPECT_OBS_STD: f64 = 1e-1;

/// Height-scaled fallback weights of the base tracker.
const W_POS: f64 = 1.0 / 20.0;
const W_VEL: f64 = 1.0 / 160.0;
const HEIGHT_ASPECT_Q: f64 = 1e-2;
const HEIGHT_ASPECT_VEL_Q: f64 = 1e-5;

/// Floor keeping inverse depth strictly positive through updates.
const GAMMA_FLOOR: f64 = 1e-9;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;

/// Mean and covariance of one track's filter.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub mean: StateVector,
    pub cov: StateMatrix,
}

/// One frame's observation: a detected box and, when a depth raster was
/// available, the mean inverse depth over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub bbox: BBox,
    pub gamma: Option<f64>,
}

impl Measurement {
    pub fn new(bbox: BBox, gamma: Option<f64>) -> Result<Self, CoreError> {
        bbox.validate()?;
        if let Some(g) = gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(CoreError::NonPositiveDepth);
            }
        }
        Ok(Measurement { bbox, gamma })
    }
}

/// How the process/observation noise scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// Noise stds proportional to the aggregated inverse depth (f-scaled
    /// variances; the depth-aware model).
    DepthScaled,
    /// The base tracker's default: noise stds proportional to box height.
    HeightScaled,
}

/// Filter tunables. `f_process`/`f_observation` are the f-scaled noise
/// coefficients; `focal` unscales them where a quantity is not itself
/// f-scaled (the inverse-depth and aspect rows).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanParams {
    pub f_process: f64,
    pub f_observation: f64,
    pub sigma_gamma: f64,
    pub focal: f64,
    pub noise: NoiseModel,
}

impl KalmanParams {
    pub fn from_config(cfg: &crate::Config, focal: f64) -> Self {
        KalmanParams {
            f_process: cfg.f_process,
            f_observation: cfg.f_observation,
            sigma_gamma: cfg.sigma_gamma,
            focal,
            noise: if cfg.depth_noise && !cfg.depth_disabled {
                NoiseModel::DepthScaled
            } else {
                NoiseModel::HeightScaled
            },
        }
    }
}

/// Start a track from a detection and its observed inverse depth.
///
/// The velocity block is zero (no motion evidence yet) with stds ten times
/// the corresponding position stds.
pub fn init_state(
    det: &BBox,
    gamma_obs: f64,
    params: &KalmanParams,
) -> Result<TrackState, CoreError> {
    det.validate()?;
    if !(gamma_obs.is_finite() && gamma_obs > 0.0) {
        return Err(CoreError::NonPositiveDepth);
    }
    let mut mean = StateVector::zeros();
    mean[IX] = det.cx;
    mean[IY] = det.cy;
    mean[IG] = gamma_obs;
    mean[IA] = det.aspect;
    mean[IH] = det.height;

    let p = match params.noise {
        NoiseModel::DepthScaled => params.f_observation * gamma_obs,
        NoiseModel::HeightScaled => 2.0 * W_POS * det.height,
    };
    let a_std = ASPECT_OBS_STD;
    let g_std = params.sigma_gamma;
    let stds = [p, p, g_std, a_std, p, 10.0 * p, 10.0 * p, 10.0 * g_std, 10.0 * a_std, 10.0 * p];

    let mut cov = StateMatrix::zeros();
    for (i, s) in stds.iter().enumerate() {
        cov[(i, i)] = s * s;
    }
    Ok(TrackState { mean, cov })
}

/// Constant-velocity transition; during occlusion the person is treated as a
/// point and the aspect/height rows carry no velocity.
fn transition(occluded: bool) -> StateMatrix {
    let mut f = StateMatrix::identity();
    f[(IX, IX + MEAS_DIM)] = 1.0;
    f[(IY, IY + MEAS_DIM)] = 1.0;
    f[(IG, IG + MEAS_DIM)] = 1.0;
    if !occluded {
        f[(IA, IA + MEAS_DIM)] = 1.0;
        f[(IH, IH + MEAS_DIM)] = 1.0;
    }
    f
}

/// Per-frame process noise stds for the full state.
fn process_stds(gamma_hat: f64, height: f64, params: &KalmanParams) -> [f64; STATE_DIM] {
    // Inverse depth follows the same 3D constant-velocity noise as X and Z;
    // mapped through d(1/Z) = -dZ/Z^2 its std is (f_process/f) * gamma^2.
    let g = (params.f_process / params.focal) * gamma_hat * gamma_hat;
    match params.noise {
        NoiseModel::DepthScaled => {
            let q = params.f_process * gamma_hat;
            let a = (params.f_process / params.focal) * gamma_hat;
            [q, q, g, a, q, q, q, g, a, q]
        }
        NoiseModel::HeightScaled => {
            let qp = W_POS * height;
            let qv = W_VEL * height;
            [qp, qp, g, HEIGHT_ASPECT_Q, qp, qv, qv, g, HEIGHT_ASPECT_VEL_Q, qv]
        }
    }
}

/// Observation noise stds for the 5-dim measurement `[x, y, gamma, a, h]`.
fn observation_stds(state: &TrackState, params: &KalmanParams) -> [f64; MEAS_DIM] {
    let r = match params.noise {
        NoiseModel::DepthScaled => params.f_observation * state.mean[IG].max(GAMMA_FLOOR),
        NoiseModel::HeightScaled => W_POS * state.mean[IH].max(1.0),
    };
    [r, r, params.sigma_gamma, ASPECT_OBS_STD, r]
}

/// Advance a track one frame.
///
/// `gamma_hat` is the aggregated inverse depth that scales the process noise;
/// `occluded` freezes the aspect and height rows.
pub fn predict(
    s: &TrackState,
    occluded: bool,
    gamma_hat: f64,
    params: &KalmanParams,
) -> Result<TrackState, CoreError> {
    if !(gamma_hat.is_finite() && gamma_hat > 0.0) {
        return Err(CoreError::NonPositiveDepth);
    }
    let f = transition(occluded);
    let stds = process_stds(gamma_hat, s.mean[IH], params);
    let mean = f * s.mean;
    let mut cov = f * s.cov * f.transpose();
    for (i, std) in stds.iter().enumerate() {
        cov[(i, i)] += std * std;
    }
    symmetrize(&mut cov);
    Ok(TrackState { mean, cov })
}

/// Linear-Gaussian measurement update.
///
/// Measurements carrying inverse depth update all five observed rows; without
/// it the depth row drops out of the observation matrix.
pub fn update(
    s: &TrackState,
    m: &Measurement,
    params: &KalmanParams,
) -> Result<TrackState, CoreError> {
    let r = observation_stds(s, params);
    match m.gamma {
        Some(g) => {
            let rows = [IX, IY, IG, IA, IH];
            let z =
                SVector::<f64, 5>::from([m.bbox.cx, m.bbox.cy, g, m.bbox.aspect, m.bbox.height]);
            let rd = SVector::<f64, 5>::from([r[0], r[1], r[2], r[3], r[4]]);
            update_rows::<5>(s, &rows, &z, &rd)
        }
        None => {
            let rows = [IX, IY, IA, IH];
            let z = SVector::<f64, 4>::from([m.bbox.cx, m.bbox.cy, m.bbox.aspect, m.bbox.height]);
            let rd = SVector::<f64, 4>::from([r[0], r[1], r[3], r[4]]);
            update_rows::<4>(s, &rows, &z, &rd)
        }
    }
}

/// Squared Mahalanobis distance of a measurement under the predicted
/// measurement distribution (innovation covariance includes observation
/// noise). Used for association gating.
pub fn mahalanobis(
    s: &TrackState,
    m: &Measurement,
    params: &KalmanParams,
    gate_gamma: bool,
) -> Result<f64, CoreError> {
    let r = observation_stds(s, params);
    match m.gamma.filter(|_| gate_gamma) {
        Some(g) => {
            let rows = [IX, IY, IG, IA, IH];
            let z =
                SVector::<f64, 5>::from([m.bbox.cx, m.bbox.cy, g, m.bbox.aspect, m.bbox.height]);
            let rd = SVector::<f64, 5>::from([r[0], r[1], r[2], r[3], r[4]]);
            mahalanobis_rows::<5>(s, &rows, &z, &rd)
        }
        None => {
            let rows = [IX, IY, IA, IH];
            let z = SVector::<f64, 4>::from([m.bbox.cx, m.bbox.cy, m.bbox.aspect, m.bbox.height]);
            let rd = SVector::<f64, 4>::from([r[0], r[1], r[3], r[4]]);
            mahalanobis_rows::<4>(s, &rows, &z, &rd)
        }
    }
}

/// The chi-square 0.95 gate matching the measurement dimensionality.
pub fn gating_threshold(gate_gamma: bool) -> f64 {
    if gate_gamma {
        11.070497693516351 // 5 dof
    } else {
        9.487729036781154 // 4 dof
    }
}

/// Bounding box of a state mean.
pub fn state_bbox(s: &TrackState) -> Result<BBox, CoreError> {
    BBox::new(s.mean[IX], s.mean[IY], s.mean[IA], s.mean[IH])
}

/// Inverse depth of a state mean.
pub fn state_gamma(s: &TrackState) -> f64 {
    s.mean[IG]
}

/// The (x, gamma) marginal of the state covariance, used for hypothesis
/// sampling and the top-down view.
pub fn xg_marginal(s: &TrackState) -> (f64, f64, [[f64; 2]; 2]) {
    (
        s.mean[IX],
        s.mean[IG],
        [[s.cov[(IX, IX)], s.cov[(IX, IG)]], [s.cov[(IG, IX)], s.cov[(IG, IG)]]],
    )
}

fn update_rows<const M: usize>(
    s: &TrackState,
    rows: &[usize; M],
    z: &SVector<f64, M>,
    r_stds: &SVector<f64, M>,
) -> Result<TrackState, CoreError> {
    let mut h = SMatrix::<f64, M, STATE_DIM>::zeros();
    for (i, &row) in rows.iter().enumerate() {
        h[(i, row)] = 1.0;
    }
    let mut innovation_cov = h * s.cov * h.transpose();
    for i in 0..M {
        innovation_cov[(i, i)] += r_stds[i] * r_stds[i];
    }
    let chol = nalgebra::Cholesky::new(innovation_cov).ok_or(CoreError::SingularCovariance)?;
    let gain = s.cov * h.transpose() * chol.inverse();
    let innovation = z - h * s.mean;
    let mut mean = s.mean + gain * innovation;
    let mut cov = (StateMatrix::identity() - gain * h) * s.cov;
    symmetrize(&mut cov);
    if mean[IG] < GAMMA_FLOOR {
        mean[IG] = GAMMA_FLOOR;
    }
    Ok(TrackState { mean, cov })
}

fn mahalanobis_rows<const M: usize>(
    s: &TrackState,
    rows: &[usize; M],
    z: &SVector<f64, M>,
    r_stds: &SVector<f64, M>,
) -> Result<f64, CoreError> {
    let mut h = SMatrix::<f64, M, STATE_DIM>::zeros();
    for (i, &row) in rows.iter().enumerate() {
        h[(i, row)] = 1.0;
    }
    let mut innovation_cov = h * s.cov * h.transpose();
    for i in 0..M {
        innovation_cov[(i, i)] += r_stds[i] * r_stds[i];
    }
    let chol = nalgebra::Cholesky::new(innovation_cov).ok_or(CoreError::SingularCovariance)?;
    let innovation = z - h * s.mean;
    let solved = chol.solve(&innovation);
    Ok(innovation.dot(&solved))
}

fn symmetrize(m: &mut StateMatrix) {
    let t = m.transpose();
    *m = (*m + t) * 0.5;
}

/// Ring of recent inverse-depth values (observations and state estimates);
/// its running median is the `gamma_hat` fed to [`predict`].
#[derive(Debug, Clone)]
pub struct DepthAggregator {
    window: usize,
    entries: VecDeque<f64>,
}

impl DepthAggregator {
    pub fn new(window: usize) -> Self {
        DepthAggregator { window: window.max(1), entries: VecDeque::new() }
    }

    pub fn push(&mut self, gamma: f64) {
        if self.entries.len() == self.window {
            self.entries.pop_front();
        }
        self.entries.push_back(gamma);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Median of the retained entries.
    pub fn gamma_hat(&self) -> Result<f64, CoreError> {
        if self.entries.is_empty() {
            return Err(CoreError::EmptyHistory);
        }
        let mut v: alloc::vec::Vec<f64> = self.entries.iter().copied().collect();
        v.sort_unstable_by(f64::total_cmp);
        Ok(v[(v.len() - 1) / 2])
    }
}
