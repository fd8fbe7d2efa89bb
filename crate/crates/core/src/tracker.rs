//! The per-frame tracking loop: warp, predict, match, update, freespace
//! filtering, lifecycle and reporting.
//!
//! Matched tracks are reported as visible people. Unmatched confirmed tracks
//! are the interesting case: their forecast is compared against the freespace
//! horizon, and depending on where it lands the track is reported as an
//! occluded person, silently suppressed for the frame, or deleted as a
//! forecasting error. Everything is deterministic given the configuration.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::assoc::{match_frame, Detection, MatchParams};
use crate::config::Config;
use crate::depth::{freespace_verdict, DepthField, FreespaceVerdict, Mask};
use crate::error::CoreError;
use crate::geometry::{BBox, Warp};
use crate::hypo::{derive_seed, sample_topk, SampleConstraint};
use crate::kalman::{self, KalmanParams, Measurement};
use crate::records::{PredEntry, SequencePred};
use crate::track::{apply_warp, Track, TrackStatus, CONFIRM_HITS};

/// Everything the tracker consumes for one frame.
#[derive(Debug)]
pub struct FrameInput<'a> {
    pub frame: u64,
    pub detections: Vec<Detection>,
    pub depth: Option<&'a DepthField>,
    pub mask: Option<&'a Mask>,
    pub warp: Warp,
}

/// One reported person. `xg_cov` is the (x, inverse-depth) marginal
/// covariance behind the hypothesis distribution (the top-down view).
#[derive(Debug, Clone, PartialEq)]
pub struct ReportedPerson {
    pub id: u64,
    pub bbox: BBox,
    pub gamma: f64,
    pub occluded: bool,
    pub hyps: Vec<BBox>,
    pub xg_cov: [[f64; 2]; 2],
}

/// Everything the tracker reports for one frame. Suppressed and deleted
/// tracks never appear here.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameOutput {
    pub frame: u64,
    pub people: Vec<ReportedPerson>,
}

/// Hook for plugging an external trajectory forecaster into the tracker.
///
/// The built-in constant-velocity model forecasts every occluded track; an
/// installed forecaster sees the track's recent birds-eye trajectory and may
/// override the forecast position. Learned social forecasters slot in here;
/// the tracker itself only ships the linear model.
pub trait Forecaster {
    /// Called after the motion-model predict of an occluded track.
    ///
    /// `history` holds the track's recent (x, z) states, oldest first, from
    /// frames where the person was seen; `predicted` is the linear forecast
    /// for the current frame. Return a replacement (x, z) or `None` to keep
    /// the linear forecast.
    fn forecast(
        &mut self,
        track_id: u64,
        history: &[(f64, f64)],
        predicted: (f64, f64),
    ) -> Option<(f64, f64)>;
}

/// Online tracker over one sequence. Strictly single-threaded per sequence;
/// run independent instances for concurrent sequences.
pub struct Tracker {
    cfg: Config,
    focal: f64,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
    forecaster: Option<alloc::boxed::Box<dyn Forecaster>>,
}

impl core::fmt::Debug for Tracker {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Tracker")
            .field("cfg", &self.cfg)
            .field("focal", &self.focal)
            .field("tracks", &self.tracks)
            .field("next_id", &self.next_id)
            .field("last_frame", &self.last_frame)
            .field("forecaster", &self.forecaster.as_ref().map(|_| "installed"))
            .finish()
    }
}

impl Tracker {
    /// `focal` is the camera focal length in pixels; pass the image width
    /// when no calibration is known.
    pub fn new(cfg: Config, focal: f64) -> Result<Self, CoreError> {
        cfg.validate()?;
        let focal = cfg.focal.unwrap_or(focal);
        if !(focal.is_finite() && focal > 0.0) {
            return Err(CoreError::InvalidParameter("focal must be positive"));
        }
        Ok(Tracker {
            cfg,
            focal,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            forecaster: None,
        })
    }

    /// Install an external forecaster for occluded tracks.
    pub fn set_forecaster(&mut self, forecaster: alloc::boxed::Box<dyn Forecaster>) {
        self.forecaster = Some(forecaster);
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    fn kalman_params(&self) -> KalmanParams {
        KalmanParams::from_config(&self.cfg, self.focal)
    }

    /// Advance one frame. Frames must arrive in strictly increasing order; a
    /// depth raster is required unless depth use is disabled.
    pub fn step(&mut self, input: &FrameInput<'_>) -> Result<FrameOutput, CoreError> {
        if let Some(last) = self.last_frame {
            if input.frame <= last {
                return Err(CoreError::OutOfOrderFrame { last, got: input.frame });
            }
        }
        let depth = if self.cfg.depth_disabled { None } else { input.depth };
        if !self.cfg.depth_disabled && depth.is_none() {
            return Err(CoreError::MissingDepth { frame: input.frame });
        }
        let params = self.kalman_params();
        let use_freespace = self.cfg.freespace && depth.is_some();

        // Warp and predict every active track, then drop any whose state
        // collapsed to an invalid box. An installed external forecaster may
        // override the birds-eye forecast of occluded tracks.
        for t in &mut self.tracks {
            apply_warp(t, &input.warp);
            let occluded = t.status == TrackStatus::Occluded;
            t.state = kalman::predict(&t.state, occluded, t.gamma_hat(), &params)?;
            t.time_since_update += 1;
            if occluded {
                if let Some(fc) = self.forecaster.as_mut() {
                    let predicted = (t.state.mean[0], 1.0 / t.gamma().max(1e-9));
                    let history: Vec<(f64, f64)> = t.topdown_history.iter().copied().collect();
                    if let Some((x, z)) = fc.forecast(t.id, &history, predicted) {
                        if z > 0.0 {
                            t.state.mean[0] = x;
                            t.state.mean[2] = 1.0 / z;
                        }
                    }
                }
            }
            if t.bbox().is_err() {
                log::warn!("track {} collapsed to an invalid box; deleting", t.id);
                t.status = TrackStatus::Deleted;
            }
        }
        self.tracks.retain(|t| t.status != TrackStatus::Deleted);

        // Freespace verdict per track, from the forecast depth and the
        // observed horizon at the forecast position.
        let verdicts: Vec<Option<FreespaceVerdict>> = match depth {
            Some(d) if use_freespace => self
                .tracks
                .iter()
                .map(|t| {
                    let z_f = 1.0 / t.gamma().max(1e-9);
                    let z_o = d.horizon_depth(&t.bbox().expect("validated above"));
                    freespace_verdict(z_f, z_o, self.cfg.alpha_supp, self.cfg.alpha_delete)
                })
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .map(Some)
                .collect(),
            _ => vec![None; self.tracks.len()],
        };
        // A track sits out IoU matching only once it is actually in the
        // occluded state AND its forecast still lies beyond the horizon; a
        // visible track briefly misjudged as beyond-horizon keeps competing
        // for detections, and an occluded track whose forecast re-enters
        // freespace (the person walked out from behind the occluder) becomes
        // matchable again.
        let occluded_candidate: Vec<bool> = verdicts
            .iter()
            .zip(&self.tracks)
            .map(|(v, t)| {
                t.status == TrackStatus::Occluded
                    && matches!(v, Some(FreespaceVerdict::ReportOccluded))
            })
            .collect();

        // Observed inverse depth per detection; a box outside the image has
        // no observable depth and simply skips the depth update.
        let detections: Vec<Detection> = input
            .detections
            .iter()
            .map(|det| Detection {
                bbox: det.bbox,
                gamma: depth.and_then(|d| d.region_inverse_depth(&det.bbox, input.mask).ok()),
                feature: det.feature.clone(),
            })
            .collect();

        let match_params = MatchParams {
            kalman: params,
            gate_gamma: self.cfg.gate_gamma && depth.is_some(),
            min_iou: self.cfg.min_iou,
            cascade_depth: self.cfg.n_age,
        };
        let result = match_frame(&self.tracks, &detections, &occluded_candidate, &match_params)?;

        let mut reported: Vec<(usize, bool)> = Vec::new(); // (track index, occluded flag)

        for &(ti, dj) in &result.matches {
            let det = &detections[dj];
            let m = Measurement::new(det.bbox, det.gamma)?;
            let t = &mut self.tracks[ti];
            t.state = kalman::update(&t.state, &m, &params)?;
            t.time_since_update = 0;
            t.hits += 1;
            if let Some(g) = det.gamma {
                t.depth_history.push(g);
            }
            t.depth_history.push(t.gamma());
            if let Some(f) = &det.feature {
                t.push_feature(f.clone());
            }
            t.status = match t.status {
                TrackStatus::Tentative if t.hits < CONFIRM_HITS => TrackStatus::Tentative,
                _ => TrackStatus::Visible,
            };
            t.push_topdown();
            if t.bbox().is_ok() {
                reported.push((ti, false));
            }
        }

        for &ti in result.unmatched_visible.iter().chain(&result.unmatched_occluded) {
            let t = &mut self.tracks[ti];
            if t.status == TrackStatus::Tentative {
                t.status = TrackStatus::Deleted;
                continue;
            }
            match verdicts[ti] {
                Some(FreespaceVerdict::Delete) => {
                    t.status = TrackStatus::Deleted;
                    continue;
                }
                Some(FreespaceVerdict::Suppress) => {
                    // forecast sits just inside freespace: stay visible but
                    // withhold the report this frame
                    t.status = TrackStatus::Visible;
                }
                Some(FreespaceVerdict::ReportOccluded) => {
                    t.status = TrackStatus::Occluded;
                    if self.cfg.report_occluded {
                        reported.push((ti, true));
                    }
                }
                None => {
                    if self.cfg.report_occluded {
                        t.status = TrackStatus::Occluded;
                        reported.push((ti, true));
                    }
                }
            }
            if t.time_since_update > self.cfg.n_age {
                t.status = TrackStatus::Deleted;
            }
        }
        // a track deleted by age this frame must not be reported
        reported.retain(|&(ti, _)| self.tracks[ti].status != TrackStatus::Deleted);

        for &dj in &result.unmatched_detections {
            let det = &detections[dj];
            let gamma = det.gamma.unwrap_or(1.0);
            let mut t = Track::new(self.next_id, &det.bbox, gamma, &params, self.cfg.depth_window)?;
            if let Some(f) = &det.feature {
                t.push_feature(f.clone());
            }
            self.next_id += 1;
            let ti = self.tracks.len();
            self.tracks.push(t);
            reported.push((ti, false));
        }

        // Assemble the frame output, sorted by track id.
        let constraint = match depth {
            Some(d) if use_freespace => {
                SampleConstraint::Freespace { depth: d, alpha_supp: self.cfg.alpha_supp }
            }
            _ => SampleConstraint::None,
        };
        reported.sort_by_key(|&(ti, _)| self.tracks[ti].id);
        let mut people = Vec::with_capacity(reported.len());
        for (ti, occluded) in reported {
            let t = &self.tracks[ti];
            let seed = derive_seed(self.cfg.seed, input.frame, t.id);
            let hyps = sample_topk(&t.state, constraint, self.cfg.k, seed)?;
            let (_, _, xg_cov) = kalman::xg_marginal(&t.state);
            people.push(ReportedPerson {
                id: t.id,
                bbox: hyps[0],
                gamma: t.gamma(),
                occluded,
                hyps,
                xg_cov,
            });
        }

        self.tracks.retain(|t| t.status != TrackStatus::Deleted);
        self.last_frame = Some(input.frame);
        Ok(FrameOutput { frame: input.frame, people })
    }
}

/// Collect frame outputs into a prediction record.
pub fn collect_predictions(name: &str, outputs: &[FrameOutput]) -> SequencePred {
    let mut entries = Vec::new();
    for out in outputs {
        for p in &out.people {
            entries.push(PredEntry {
                frame: out.frame,
                id: p.id,
                occluded: p.occluded,
                gamma: Some(p.gamma),
                hyps: p.hyps.clone(),
            });
        }
    }
    entries.sort_by_key(|e| (e.frame, e.id));
    SequencePred { name: String::from(name), entries }
}

/// Offline gap filling: linearly interpolate each track's box parameters
/// across missing frames, using both endpoints. The evaluation harness uses
/// this as its oracle baseline; it is not part of the online tracker.
///
/// Gaps at sequence boundaries are left empty (no extrapolation) and filled
/// entries carry a single hypothesis and the occluded flag.
pub fn interpolate_offline(pred: &SequencePred) -> SequencePred {
    use alloc::collections::BTreeMap;
    let mut by_id: BTreeMap<u64, Vec<&PredEntry>> = BTreeMap::new();
    for e in &pred.entries {
        by_id.entry(e.id).or_default().push(e);
    }
    let mut entries: Vec<PredEntry> = pred.entries.clone();
    for (id, mut es) in by_id {
        es.sort_by_key(|e| e.frame);
        for pair in es.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b.frame <= a.frame + 1 {
                continue;
            }
            let (ba, bb) = (a.top1(), b.top1());
            let span = (b.frame - a.frame) as f64;
            for f in (a.frame + 1)..b.frame {
                let w = (f - a.frame) as f64 / span;
                let lerp = |x: f64, y: f64| x + (y - x) * w;
                let bx = BBox {
                    cx: lerp(ba.cx, bb.cx),
                    cy: lerp(ba.cy, bb.cy),
                    aspect: lerp(ba.aspect, bb.aspect),
                    height: lerp(ba.height, bb.height),
                };
                let gamma = match (a.gamma, b.gamma) {
                    (Some(x), Some(y)) => Some(lerp(x, y)),
                    _ => None,
                };
                entries.push(PredEntry { frame: f, id, occluded: true, gamma, hyps: vec![bx] });
            }
        }
    }
    entries.sort_by_key(|e| (e.frame, e.id));
    SequencePred { name: pred.name.clone(), entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn base_cfg() -> Config {
        Config {
            f_process: 20.0,
            f_observation: 30.0,
            focal: Some(300.0),
            seed: 7,
            ..Config::default()
        }
    }

    fn det(cx: f64, cy: f64, h: f64) -> Detection {
        Detection { bbox: BBox::new(cx, cy, 0.4, h).unwrap(), gamma: None, feature: None }
    }

    /// Flat world at depth 50 everywhere.
    fn flat_depth(frame: u64) -> DepthField {
        DepthField::constant(320, 180, frame, 50.0).unwrap()
    }

    #[test]
    fn single_walker_is_visible_every_frame() {
        let mut tracker = Tracker::new(base_cfg(), 300.0).unwrap();
        let mut outputs = Vec::new();
        for f in 1..=40u64 {
            let d = flat_depth(f);
            // depth 10 walker on a depth-50 background would be suppressed if
            // unmatched, but it is matched every frame
            let input = FrameInput {
                frame: f,
                detections: alloc::vec![det(50.0 + 2.0 * f as f64, 90.0, 40.0)],
                depth: Some(&d),
                mask: None,
                warp: Warp::identity(),
            };
            outputs.push(tracker.step(&input).unwrap());
        }
        for out in &outputs {
            assert_eq!(out.people.len(), 1, "frame {}", out.frame);
            assert!(!out.people[0].occluded);
            assert_eq!(out.people[0].id, 1);
        }
    }

    #[test]
    fn out_of_order_frames_error() {
        let mut tracker = Tracker::new(base_cfg(), 300.0).unwrap();
        let d = flat_depth(5);
        let input = FrameInput {
            frame: 5,
            detections: alloc::vec![],
            depth: Some(&d),
            mask: None,
            warp: Warp::identity(),
        };
        tracker.step(&input).unwrap();
        let d = flat_depth(5);
        let again = FrameInput {
            frame: 5,
            detections: alloc::vec![],
            depth: Some(&d),
            mask: None,
            warp: Warp::identity(),
        };
        assert!(matches!(tracker.step(&again), Err(CoreError::OutOfOrderFrame { .. })));
    }

    #[test]
    fn missing_depth_errors_unless_disabled() {
        let mut tracker = Tracker::new(base_cfg(), 300.0).unwrap();
        let input = FrameInput {
            frame: 1,
            detections: alloc::vec![],
            depth: None,
            mask: None,
            warp: Warp::identity(),
        };
        assert!(matches!(tracker.step(&input), Err(CoreError::MissingDepth { .. })));

        let cfg = Config { depth_disabled: true, ..base_cfg() };
        let mut tracker = Tracker::new(cfg, 300.0).unwrap();
        let input = FrameInput {
            frame: 1,
            detections: alloc::vec![det(50.0, 90.0, 40.0)],
            depth: None,
            mask: None,
            warp: Warp::identity(),
        };
        let out = tracker.step(&input).unwrap();
        assert_eq!(out.people.len(), 1);
    }

    #[test]
    fn empty_detections_produce_empty_predictions() {
        let mut tracker = Tracker::new(base_cfg(), 300.0).unwrap();
        let mut outputs = Vec::new();
        for f in 1..=5u64 {
            let d = flat_depth(f);
            let input = FrameInput {
                frame: f,
                detections: alloc::vec![],
                depth: Some(&d),
                mask: None,
                warp: Warp::identity(),
            };
            outputs.push(tracker.step(&input).unwrap());
        }
        let pred = collect_predictions("t", &outputs);
        assert!(pred.entries.is_empty());
    }

    #[test]
    fn forecast_in_open_freespace_is_deleted() {
        // confirm a track, then remove its detections; the forecast depth
        // (10) lies far in front of the 50-depth background, so the track is
        // deleted the moment it goes unmatched
        let mut tracker = Tracker::new(base_cfg(), 300.0).unwrap();
        for f in 1..=6u64 {
            let d = flat_depth(f);
            // gamma observed will be 1/50 = 0.02 -> depth 50; to make the
            // forecast land in freespace use a nearer person on a far wall:
            // craft a raster where the person's box reads depth 10
            let mut vals = alloc::vec![50.0f32; 320 * 180];
            for y in 60..120 {
                for x in 40..72 {
                    vals[y * 320 + x] = 10.0;
                }
            }
            let d2 = DepthField::new(320, 180, d.frame_id(), vals).unwrap();
            let input = FrameInput {
                frame: f,
                detections: alloc::vec![det(56.0, 90.0, 40.0)],
                depth: Some(&d2),
                mask: None,
                warp: Warp::identity(),
            };
            tracker.step(&input).unwrap();
        }
        assert_eq!(tracker.tracks().len(), 1);
        // person vanishes; its forecast stays near x=56 where the horizon is
        // now the 50-depth wall: z_f = 10 < 0.88 * 50 -> delete
        let d = flat_depth(7);
        let input = FrameInput {
            frame: 7,
            detections: alloc::vec![],
            depth: Some(&d),
            mask: None,
            warp: Warp::identity(),
        };
        let out = tracker.step(&input).unwrap();
        assert!(out.people.is_empty());
        assert!(tracker.tracks().is_empty());
    }

    #[test]
    fn occluded_forecast_is_reported_with_hypotheses() {
        let cfg = Config { k: 4, ..base_cfg() };
        let mut tracker = Tracker::new(cfg, 300.0).unwrap();
        // visible phase: person at depth 10 (their box pixels read 10)
        for f in 1..=6u64 {
            let mut vals = alloc::vec![50.0f32; 320 * 180];
            for y in 60..120 {
                for x in ((40 + 2 * f as usize)..(72 + 2 * f as usize)).take(32) {
                    vals[y * 320 + x] = 10.0;
                }
            }
            let d = DepthField::new(320, 180, f, vals).unwrap();
            let input = FrameInput {
                frame: f,
                detections: alloc::vec![det(56.0 + 2.0 * f as f64, 90.0, 40.0)],
                depth: Some(&d),
                mask: None,
                warp: Warp::identity(),
            };
            tracker.step(&input).unwrap();
        }
        // occluder at depth 5 now covers the forecast position: report occluded
        let mut vals = alloc::vec![5.0f32; 320 * 180];
        for v in vals.iter_mut() {
            *v = 5.0;
        }
        let d = DepthField::new(320, 180, 7, vals).unwrap();
        let input = FrameInput {
            frame: 7,
            detections: alloc::vec![],
            depth: Some(&d),
            mask: None,
            warp: Warp::identity(),
        };
        let out = tracker.step(&input).unwrap();
        assert_eq!(out.people.len(), 1);
        let p = &out.people[0];
        assert!(p.occluded);
        assert_eq!(p.hyps.len(), 4);
        assert_eq!(p.hyps[0], p.bbox);
    }

    #[test]
    fn ids_strictly_increase_and_never_return() {
        let mut tracker = Tracker::new(base_cfg(), 300.0).unwrap();
        let mut seen = alloc::collections::BTreeSet::new();
        for f in 1..=30u64 {
            let d = flat_depth(f);
            // a new short-lived detection cluster every few frames
            let dets = if f % 3 == 0 {
                alloc::vec![det(30.0 + f as f64 * 7.0 % 250.0, 90.0, 40.0)]
            } else {
                alloc::vec![]
            };
            let input = FrameInput {
                frame: f,
                detections: dets,
                depth: Some(&d),
                mask: None,
                warp: Warp::identity(),
            };
            let out = tracker.step(&input).unwrap();
            for p in &out.people {
                seen.insert(p.id);
            }
        }
        let ids: Vec<u64> = seen.into_iter().collect();
        for w in ids.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn interpolation_midpoint_and_identity() {
        let bx = |cx: f64| BBox::new(cx, 50.0, 0.5, 40.0).unwrap();
        let entries = alloc::vec![
            PredEntry {
                frame: 1,
                id: 1,
                occluded: false,
                gamma: Some(0.1),
                hyps: alloc::vec![bx(0.0)]
            },
            PredEntry {
                frame: 11,
                id: 1,
                occluded: false,
                gamma: Some(0.2),
                hyps: alloc::vec![bx(10.0)]
            },
        ];
        let pred = SequencePred { name: String::new(), entries };
        let filled = interpolate_offline(&pred);
        assert_eq!(filled.entries.len(), 11);
        let mid = filled.entries.iter().find(|e| e.frame == 6).unwrap();
        assert_abs_diff_eq!(mid.top1().cx, 5.0, epsilon = 1e-12);
        assert!(mid.occluded);
        assert_abs_diff_eq!(mid.gamma.unwrap(), 0.15, epsilon = 1e-12);

        // no gaps: unchanged
        let dense = SequencePred {
            name: String::new(),
            entries: (1..=3u64)
                .map(|f| PredEntry {
                    frame: f,
                    id: 1,
                    occluded: false,
                    gamma: None,
                    hyps: alloc::vec![bx(f as f64)],
                })
                .collect(),
        };
        assert_eq!(interpolate_offline(&dense), dense);
    }

    #[test]
    fn interpolation_leaves_boundary_gaps_empty() {
        let bx = |cx: f64| BBox::new(cx, 50.0, 0.5, 40.0).unwrap();
        // track exists only at frames 5..=6; nothing before or after may appear
        let entries = alloc::vec![
            PredEntry { frame: 5, id: 1, occluded: false, gamma: None, hyps: alloc::vec![bx(0.0)] },
            PredEntry { frame: 6, id: 1, occluded: false, gamma: None, hyps: alloc::vec![bx(1.0)] },
        ];
        let pred = SequencePred { name: String::new(), entries: entries.clone() };
        assert_eq!(interpolate_offline(&pred).entries, entries);
    }

    #[test]
    fn prefix_run_reproduces_prefix_of_full_run() {
        // online causality: outputs at frame t depend only on frames <= t
        let run = |n: u64| -> Vec<FrameOutput> {
            let mut tracker = Tracker::new(base_cfg(), 300.0).unwrap();
            let mut outs = Vec::new();
            for f in 1..=n {
                let d = flat_depth(f);
                let dets = if f % 7 == 0 {
                    alloc::vec![]
                } else {
                    alloc::vec![det(50.0 + 2.0 * f as f64, 90.0, 40.0), det(250.0, 60.0, 30.0)]
                };
                let input = FrameInput {
                    frame: f,
                    detections: dets,
                    depth: Some(&d),
                    mask: None,
                    warp: Warp::identity(),
                };
                outs.push(tracker.step(&input).unwrap());
            }
            outs
        };
        let full = run(30);
        let prefix = run(18);
        assert_eq!(&full[..18], &prefix[..]);
    }
}
