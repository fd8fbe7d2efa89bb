//! Detection-to-track association.
//!
//! Two stages, following the base tracker: confirmed tracks first bid for
//! detections with appearance costs under a Mahalanobis gate, cascading from
//! recently-seen tracks to older ones; whatever remains is matched by IoU
//! against the forecasted boxes. Tracks whose forecast lies beyond the
//! freespace horizon sit out the IoU stage — there is nothing visible at
//! their position to match.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::geometry::{iou, BBox};
use crate::kalman::{self, KalmanParams, Measurement};
use crate::track::Track;

/// One detection handed to the matcher: box, observed inverse depth (when a
/// depth raster was available) and an optional appearance feature.
#[derive(Debug, Clone)]
pub struct Detection {
    pub bbox: BBox,
    pub gamma: Option<f64>,
    pub feature: Option<Vec<f64>>,
}

impl Detection {
    pub fn measurement(&self) -> Result<Measurement, CoreError> {
        Measurement::new(self.bbox, self.gamma)
    }
}

/// Rows are tracks, columns are detections; `f64::INFINITY` marks a gated
/// (forbidden) pair.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        CostMatrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

/// Result of matching one frame, partitioning tracks and detections.
///
/// Indices refer to the slices given to [`match_frame`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchResult {
    /// Matched (track, detection) pairs.
    pub matches: Vec<(usize, usize)>,
    /// Unmatched tracks that should have been visible.
    pub unmatched_visible: Vec<usize>,
    /// Unmatched tracks that are occlusion candidates.
    pub unmatched_occluded: Vec<usize>,
    /// Detections claimed by no track.
    pub unmatched_detections: Vec<usize>,
}

/// Appearance cost between a track's feature gallery and a detection feature:
/// the smallest cosine distance over the gallery. All vectors are unit-norm.
/// An empty gallery yields `INFINITY` (nothing to compare against).
pub fn appearance_cost<'a, I>(gallery: I, feature: &[f64]) -> Result<f64, CoreError>
where
    I: IntoIterator<Item = &'a Vec<f64>>,
{
    let mut best = f64::INFINITY;
    for g in gallery {
        if g.len() != feature.len() {
            return Err(CoreError::FeatureDimMismatch { expected: g.len(), got: feature.len() });
        }
        let dot: f64 = g.iter().zip(feature).map(|(a, b)| a * b).sum();
        best = best.min(1.0 - dot);
    }
    Ok(best)
}

/// Minimum-cost assignment over the non-gated entries of a cost matrix.
///
/// Maximum-cardinality first, then minimum total cost; returned pairs are
/// sorted by (row, col). Entries of `f64::INFINITY` are never assigned.
pub fn solve_assignment(c: &CostMatrix) -> Vec<(usize, usize)> {
    let (rows, cols) = (c.rows, c.cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let n = rows.max(cols);

    // Replace gated entries and padding by a cost so large that any
    // assignment using fewer of them is always cheaper; the square solver
    // then maximizes cardinality over real edges before minimizing cost.
    let mut max_finite: f64 = 0.0;
    for r in 0..rows {
        for col in 0..cols {
            let v = c.get(r, col);
            if v.is_finite() {
                max_finite = max_finite.max(v);
            }
        }
    }
    let big = (n as f64) * max_finite + 1.0;
    let mut a = vec![big; n * n];
    for r in 0..rows {
        for col in 0..cols {
            let v = c.get(r, col);
            if v.is_finite() {
                a[r * n + col] = v;
            }
        }
    }

    // Shortest augmenting path assignment with dual potentials, O(n^3).
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_row = vec![0usize; n + 1]; // 1-based row matched to each col, 0 = free
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        col_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out: Vec<(usize, usize)> = Vec::new();
    for j in 1..=n {
        let i = col_row[j];
        if i == 0 {
            continue;
        }
        let (r, col) = (i - 1, j - 1);
        if r < rows && col < cols && c.get(r, col).is_finite() {
            out.push((r, col));
        }
    }
    out.sort_unstable();
    out
}

/// Tunables consumed by [`match_frame`].
#[derive(Debug, Clone, Copy)]
pub struct MatchParams {
    pub kalman: KalmanParams,
    pub gate_gamma: bool,
    pub min_iou: f64,
    /// Cascade depth: maximum track age considered for appearance matching.
    pub cascade_depth: u32,
}

/// Match one frame's detections to the predicted tracks.
///
/// `occluded_candidate[i]` marks tracks whose forecast lies beyond the
/// freespace horizon this frame; visible tracks get IoU priority over them,
/// and whatever detections remain may still be reclaimed by occluded
/// candidates (people re-emerging from behind their occluder). Unclaimed
/// occluded candidates land in the occluded partition. When no detection
/// carries an appearance feature the cascade stage is skipped entirely.
pub fn match_frame(
    tracks: &[Track],
    detections: &[Detection],
    occluded_candidate: &[bool],
    params: &MatchParams,
) -> Result<MatchResult, CoreError> {
    debug_assert_eq!(tracks.len(), occluded_candidate.len());
    let mut matched_track = vec![false; tracks.len()];
    let mut matched_det = vec![false; detections.len()];
    let mut matches: Vec<(usize, usize)> = Vec::new();

    let gate = kalman::gating_threshold(params.gate_gamma);
    let any_features = detections.iter().any(|d| d.feature.is_some());

    // Stage 1: appearance cascade over confirmed tracks, youngest age first.
    if any_features {
        let measurements: Vec<Option<Measurement>> =
            detections.iter().map(|d| d.measurement().ok()).collect();
        for age in 1..=params.cascade_depth {
            let track_idx: Vec<usize> = (0..tracks.len())
                .filter(|&i| {
                    tracks[i].is_confirmed()
                        && tracks[i].time_since_update == age
                        && !matched_track[i]
                        && tracks[i].has_features()
                })
                .collect();
            let det_idx: Vec<usize> = (0..detections.len())
                .filter(|&j| !matched_det[j] && detections[j].feature.is_some())
                .collect();
            if track_idx.is_empty() || det_idx.is_empty() {
                continue;
            }
            let mut cost = CostMatrix::filled(track_idx.len(), det_idx.len(), f64::INFINITY);
            for (r, &ti) in track_idx.iter().enumerate() {
                for (col, &dj) in det_idx.iter().enumerate() {
                    let m = match &measurements[dj] {
                        Some(m) => m,
                        None => continue,
                    };
                    let d2 = kalman::mahalanobis(
                        &tracks[ti].state,
                        m,
                        &params.kalman,
                        params.gate_gamma,
                    )?;
                    if d2 > gate {
                        continue;
                    }
                    let feature = detections[dj].feature.as_ref().unwrap();
                    let c = appearance_cost(tracks[ti].gallery(), feature)?;
                    if c.is_finite() {
                        cost.set(r, col, c);
                    }
                }
            }
            for (r, col) in solve_assignment(&cost) {
                let (ti, dj) = (track_idx[r], det_idx[col]);
                matched_track[ti] = true;
                matched_det[dj] = true;
                matches.push((ti, dj));
            }
        }
    }

    // Stage 2: IoU matching for everything still expected to be visible.
    let visible_idx: Vec<usize> =
        (0..tracks.len()).filter(|&i| !matched_track[i] && !occluded_candidate[i]).collect();
    iou_stage(
        tracks,
        detections,
        params,
        &visible_idx,
        &mut matched_track,
        &mut matched_det,
        &mut matches,
    );

    // Stage 3: detections nobody claimed may be people re-emerging from
    // behind their occluder; let occluded candidates reclaim them rather
    // than spawning duplicates. Visible tracks kept priority in stage 2.
    let occluded_idx: Vec<usize> =
        (0..tracks.len()).filter(|&i| !matched_track[i] && occluded_candidate[i]).collect();
    iou_stage(
        tracks,
        detections,
        params,
        &occluded_idx,
        &mut matched_track,
        &mut matched_det,
        &mut matches,
    );

    matches.sort_unstable();
    let mut result = MatchResult { matches, ..Default::default() };
    for i in 0..tracks.len() {
        if matched_track[i] {
            continue;
        }
        if occluded_candidate[i] {
            result.unmatched_occluded.push(i);
        } else {
            result.unmatched_visible.push(i);
        }
    }
    for j in 0..detections.len() {
        if !matched_det[j] {
            result.unmatched_detections.push(j);
        }
    }
    Ok(result)
}

fn iou_stage(
    tracks: &[Track],
    detections: &[Detection],
    params: &MatchParams,
    track_idx: &[usize],
    matched_track: &mut [bool],
    matched_det: &mut [bool],
    matches: &mut Vec<(usize, usize)>,
) {
    let det_idx: Vec<usize> = (0..detections.len()).filter(|&j| !matched_det[j]).collect();
    if track_idx.is_empty() || det_idx.is_empty() {
        return;
    }
    let mut cost = CostMatrix::filled(track_idx.len(), det_idx.len(), f64::INFINITY);
    for (r, &ti) in track_idx.iter().enumerate() {
        let tb = match tracks[ti].bbox() {
            Ok(b) => b,
            Err(_) => continue, // collapsed state: leave the row gated
        };
        for (col, &dj) in det_idx.iter().enumerate() {
            let overlap = iou(&tb, &detections[dj].bbox);
            if overlap >= params.min_iou {
                cost.set(r, col, 1.0 - overlap);
            }
        }
    }
    for (r, col) in solve_assignment(&cost) {
        let (ti, dj) = (track_idx[r], det_idx[col]);
        matched_track[ti] = true;
        matched_det[dj] = true;
        matches.push((ti, dj));
    }
}
