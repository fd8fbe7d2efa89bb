//! Hypothesis sets: k candidate boxes per reported person.
//!
//! Localizing a fully occluded person is ambiguous, so each report carries up
//! to k boxes. The first is always the state mean; the rest are drawn from
//! the filter's (x, inverse-depth) marginal, rejecting draws whose implied
//! depth would place the person in observed freespace. Baselines without a
//! probabilistic state simulate the spread with height-scaled Gaussians.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::depth::DepthField;
use crate::error::CoreError;
use crate::geometry::BBox;
use crate::kalman::{self, TrackState};

/// Attempts per hypothesis slot before giving up and duplicating the mean.
const MAX_ATTEMPTS: usize = 100;

/// Mix a base seed with a frame and track id into a per-report RNG seed, so
/// sampling is reproducible and independent of processing order.
pub fn derive_seed(base: u64, frame: u64, track_id: u64) -> u64 {
    let mut z =
        base ^ frame.wrapping_mul(0x9e3779b97f4a7c15) ^ track_id.wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Freespace constraint applied to sampled hypotheses.
#[derive(Debug, Clone, Copy)]
pub enum SampleConstraint<'a> {
    /// Accept every draw (depth reasoning disabled).
    None,
    /// Reject draws whose sampled depth is closer than `alpha_supp` times the
    /// horizon depth at the sampled position.
    Freespace { depth: &'a DepthField, alpha_supp: f64 },
}

/// Draw a k-box hypothesis set around a track state.
///
/// The first box is the state mean. Each further box keeps the mean's y,
/// aspect and height and replaces the center x by a draw from the (x, gamma)
/// marginal; the drawn gamma is used only for the freespace test. A slot that
/// exhausts its attempts falls back to the mean box.
pub fn sample_topk(
    state: &TrackState,
    constraint: SampleConstraint<'_>,
    k: usize,
    rng_seed: u64,
) -> Result<Vec<BBox>, CoreError> {
    Ok(sample_topk_detailed(state, constraint, k, rng_seed)?.into_iter().map(|(b, _)| b).collect())
}

/// [`sample_topk`] keeping each hypothesis' sampled inverse depth alongside
/// the box (the mean's inverse depth for slot 0 and exhausted slots).
pub fn sample_topk_detailed(
    state: &TrackState,
    constraint: SampleConstraint<'_>,
    k: usize,
    rng_seed: u64,
) -> Result<Vec<(BBox, f64)>, CoreError> {
    if k == 0 {
        return Err(CoreError::InvalidParameter("k must be >= 1"));
    }
    let mean_box = kalman::state_bbox(state)?;
    let (mx, mg, cov) = kalman::xg_marginal(state);
    let mut out = Vec::with_capacity(k);
    out.push((mean_box, mg));
    if k == 1 {
        return Ok(out);
    }

    let chol = cholesky2(cov)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    for _ in 1..k {
        let mut accepted = None;
        for _ in 0..MAX_ATTEMPTS {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let x = mx + chol[0] * z1;
            let g = mg + chol[1] * z1 + chol[2] * z2;
            match constraint {
                SampleConstraint::None => {}
                SampleConstraint::Freespace { depth, alpha_supp } => {
                    if g <= 0.0 {
                        continue; // depth behind the camera: never acceptable
                    }
                    let z_sample = 1.0 / g;
                    let probe = BBox { cx: x, ..mean_box };
                    let z_o = depth.horizon_depth(&probe);
                    if z_sample < alpha_supp * z_o {
                        continue;
                    }
                }
            }
            accepted = Some((BBox { cx: x, ..mean_box }, g));
            break;
        }
        out.push(accepted.unwrap_or((mean_box, mg)));
    }
    Ok(out)
}

/// Height-scaled Gaussian hypothesis set for non-probabilistic baselines:
/// the input box first, then k-1 boxes with jittered centers.
pub fn baseline_gauss(
    bbox: &BBox,
    s_x: f64,
    s_y: f64,
    k: usize,
    rng_seed: u64,
) -> Result<Vec<BBox>, CoreError> {
    if k == 0 {
        return Err(CoreError::InvalidParameter("k must be >= 1"));
    }
    if s_x < 0.0 || s_y < 0.0 {
        return Err(CoreError::InvalidParameter("scale factors must be nonnegative"));
    }
    bbox.validate()?;
    let mut out = Vec::with_capacity(k);
    out.push(*bbox);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (sx, sy) = (s_x * bbox.height, s_y * bbox.height);
    for _ in 1..k {
        let dx: f64 = StandardNormal.sample(&mut rng);
        let dy: f64 = StandardNormal.sample(&mut rng);
        out.push(BBox { cx: bbox.cx + sx * dx, cy: bbox.cy + sy * dy, ..*bbox });
    }
    Ok(out)
}

/// Lower Cholesky factor (l11, l21, l22) of a 2x2 covariance, tolerant of
/// exactly-degenerate (zero-variance) blocks.
fn cholesky2(c: [[f64; 2]; 2]) -> Result<[f64; 3], CoreError> {
    let (sxx, sxg, sgg) = (c[0][0], c[0][1], c[1][1]);
    let tol = 1e-12 * (1.0 + sxx.abs() + sgg.abs());
    if sxx < -tol || sgg < -tol || sxx * sgg - sxg * sxg < -tol {
        return Err(CoreError::NotPositiveSemidefinite);
    }
    if sxx <= 0.0 {
        return Ok([0.0, 0.0, libm::sqrt(sgg.max(0.0))]);
    }
    let l11 = libm::sqrt(sxx);
    let l21 = sxg / l11;
    let rest = (sgg - l21 * l21).max(0.0);
    Ok([l11, l21, libm::sqrt(rest)])
}
