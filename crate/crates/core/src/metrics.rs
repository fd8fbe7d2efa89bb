//! Evaluation metrics that reward finding occluded people.
//!
//! Detection is scored with Top-k F1: every reported person contributes k
//! candidate boxes and a ground-truth box matches the best of them. In
//! occluded-only mode, matched occluded ground truth counts as a true
//! positive, unmatched occluded ground truth as a miss, and every unmatched
//! prediction as a false positive; matches to visible people neither reward
//! nor penalize. Tracking is scored with IDF1 and MOTA under the same
//! occluded accounting.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::assoc::{solve_assignment, CostMatrix};
use crate::geometry::iou;
use crate::records::{GtBox, PredEntry, SequenceGt, SequencePred};

/// How ground truth and predictions are paired within a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchingStrategy {
    /// Optimal assignment maximizing (match count, total overlap).
    Optimal,
    /// Greedy by descending overlap, tie-broken by (gt id, pred id).
    Greedy,
}

/// Detection-style counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DetCounts {
    pub tp: u64,
    pub fp: u64,
    pub misses: u64,
}

impl DetCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.misses)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn add(&mut self, other: &DetCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.misses += other.misses;
    }
}

/// Identity-level counts for IDF1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdCounts {
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

impl IdCounts {
    pub fn idf1(&self) -> f64 {
        let denom = 2 * self.idtp + self.idfp + self.idfn;
        ratio(2 * self.idtp, denom)
    }

    pub fn add(&mut self, other: &IdCounts) {
        self.idtp += other.idtp;
        self.idfp += other.idfp;
        self.idfn += other.idfn;
    }
}

/// CLEAR-MOT counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MotaCounts {
    pub tp: u64,
    pub fp: u64,
    pub misses: u64,
    pub id_switches: u64,
    pub gt_total: u64,
}

impl MotaCounts {
    /// MOTA, or `None` when there is no ground truth to score against.
    pub fn mota(&self) -> Option<f64> {
        if self.gt_total == 0 {
            return None;
        }
        Some(1.0 - (self.fp + self.misses + self.id_switches) as f64 / self.gt_total as f64)
    }

    pub fn add(&mut self, other: &MotaCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.misses += other.misses;
        self.id_switches += other.id_switches;
        self.gt_total += other.gt_total;
    }
}

/// Everything the evaluation produces for one sequence (or an aggregate).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub topk_occl: DetCounts,
    pub topk_all: DetCounts,
    pub top1_occl: DetCounts,
    pub top1_all: DetCounts,
    pub idf1_occl: IdCounts,
    pub idf1_all: IdCounts,
    pub mota_occl: MotaCounts,
    pub mota_all: MotaCounts,
}

impl MetricReport {
    pub fn add(&mut self, other: &MetricReport) {
        self.topk_occl.add(&other.topk_occl);
        self.topk_all.add(&other.topk_all);
        self.top1_occl.add(&other.top1_occl);
        self.top1_all.add(&other.top1_all);
        self.idf1_occl.add(&other.idf1_occl);
        self.idf1_all.add(&other.idf1_all);
        self.mota_occl.add(&other.mota_occl);
        self.mota_all.add(&other.mota_all);
    }
}

/// Parameters of one evaluation pass.
#[derive(Debug, Clone, Copy)]
pub struct EvalParams {
    pub alpha_iou: f64,
    pub v_thresh: f64,
    pub matching: MatchingStrategy,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams { alpha_iou: 0.5, v_thresh: 0.10, matching: MatchingStrategy::Optimal }
    }
}

/// Overlap between a ground-truth box and a hypothesis set: the maximum IoU
/// over the first `k_limit` hypotheses (all of them when `None`).
fn overlap(gt: &GtBox, pred: &PredEntry, k_limit: Option<usize>) -> f64 {
    let hyps: &[crate::geometry::BBox] = match k_limit {
        Some(k) => &pred.hyps[..k.min(pred.hyps.len())],
        None => &pred.hyps,
    };
    let mut best: f64 = 0.0;
    for h in hyps {
        best = best.max(iou(&gt.bbox, h));
    }
    best
}

/// Match one frame's ground truth to its predictions.
///
/// Returns (gt index, pred index) pairs with overlap at least `alpha_iou`.
/// The optimal strategy maximizes match count, then total overlap.
pub fn match_topk_frame(
    gts: &[&GtBox],
    preds: &[&PredEntry],
    alpha_iou: f64,
    k_limit: Option<usize>,
    strategy: MatchingStrategy,
) -> Vec<(usize, usize)> {
    match strategy {
        MatchingStrategy::Optimal => {
            let mut cost = CostMatrix::filled(gts.len(), preds.len(), f64::INFINITY);
            for (g, gt) in gts.iter().enumerate() {
                for (p, pred) in preds.iter().enumerate() {
                    let ov = overlap(gt, pred, k_limit);
                    if ov >= alpha_iou {
                        cost.set(g, p, 1.0 - ov);
                    }
                }
            }
            solve_assignment(&cost)
        }
        MatchingStrategy::Greedy => {
            let mut cand: Vec<(f64, u64, u64, usize, usize)> = Vec::new();
            for (g, gt) in gts.iter().enumerate() {
                for (p, pred) in preds.iter().enumerate() {
                    let ov = overlap(gt, pred, k_limit);
                    if ov >= alpha_iou {
                        cand.push((ov, gt.id, pred.id, g, p));
                    }
                }
            }
            cand.sort_by(|a, b| {
                b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
            });
            let mut used_g = vec![false; gts.len()];
            let mut used_p = vec![false; preds.len()];
            let mut out = Vec::new();
            for (_, _, _, g, p) in cand {
                if !used_g[g] && !used_p[p] {
                    used_g[g] = true;
                    used_p[p] = true;
                    out.push((g, p));
                }
            }
            out.sort_unstable();
            out
        }
    }
}

fn by_frame_gt(gt: &SequenceGt) -> BTreeMap<u64, Vec<&GtBox>> {
    let mut m: BTreeMap<u64, Vec<&GtBox>> = BTreeMap::new();
    for b in &gt.boxes {
        m.entry(b.frame).or_default().push(b);
    }
    m
}

fn by_frame_pred(pred: &SequencePred) -> BTreeMap<u64, Vec<&PredEntry>> {
    let mut m: BTreeMap<u64, Vec<&PredEntry>> = BTreeMap::new();
    for e in &pred.entries {
        m.entry(e.frame).or_default().push(e);
    }
    m
}

/// Top-k detection counts over a sequence.
///
/// `occluded_only` switches to the occluded accounting: TPs and misses count
/// occluded ground truth only, while every unmatched prediction stays a false
/// positive.
pub fn topk_counts(
    gt: &SequenceGt,
    pred: &SequencePred,
    params: &EvalParams,
    occluded_only: bool,
    k_limit: Option<usize>,
) -> DetCounts {
    let gtf = by_frame_gt(gt);
    let prf = by_frame_pred(pred);
    let mut frames: Vec<u64> = gtf.keys().chain(prf.keys()).copied().collect();
    frames.sort_unstable();
    frames.dedup();

    let mut counts = DetCounts::default();
    for f in frames {
        let gts = gtf.get(&f).cloned().unwrap_or_default();
        let preds = prf.get(&f).cloned().unwrap_or_default();
        let matches = match_topk_frame(&gts, &preds, params.alpha_iou, k_limit, params.matching);
        let mut gt_matched = vec![false; gts.len()];
        for &(g, _) in &matches {
            gt_matched[g] = true;
        }
        if occluded_only {
            for (g, gtb) in gts.iter().enumerate() {
                if gtb.occluded(params.v_thresh) {
                    if gt_matched[g] {
                        counts.tp += 1;
                    } else {
                        counts.misses += 1;
                    }
                }
            }
            counts.fp += (preds.len() - matches.len()) as u64;
        } else {
            counts.tp += matches.len() as u64;
            counts.misses += (gts.len() - matches.len()) as u64;
            counts.fp += (preds.len() - matches.len()) as u64;
        }
    }
    counts
}

/// Top-k precision/recall/F1.
pub fn topk_f1(
    gt: &SequenceGt,
    pred: &SequencePred,
    params: &EvalParams,
    occluded_only: bool,
    k_limit: Option<usize>,
) -> (f64, f64, f64) {
    let c = topk_counts(gt, pred, params, occluded_only, k_limit);
    (c.precision(), c.recall(), c.f1())
}

/// IDF1 counts.
///
/// Identities are paired globally. In occluded mode the pairing is driven by
/// overlap on occluded ground-truth boxes (the occluded segments); IDTP
/// rewards matched occluded boxes and IDFN counts the unmatched ones. A
/// prediction box only escapes IDFP by spatially covering a box (visible or
/// occluded) of its paired ground-truth track, so a perfect tracker scores 1
/// while stray tracks are penalized in full.
pub fn idf1_counts(
    gt: &SequenceGt,
    pred: &SequencePred,
    params: &EvalParams,
    occluded_only: bool,
) -> IdCounts {
    let total_scored_gt =
        gt.boxes.iter().filter(|b| !occluded_only || b.occluded(params.v_thresh)).count() as u64;
    let total_pred = pred.entries.len() as u64;

    let mut gt_ids: Vec<u64> = gt.boxes.iter().map(|b| b.id).collect();
    gt_ids.sort_unstable();
    gt_ids.dedup();
    let mut pred_ids: Vec<u64> = pred.entries.iter().map(|e| e.id).collect();
    pred_ids.sort_unstable();
    pred_ids.dedup();

    if gt_ids.is_empty() || pred_ids.is_empty() {
        return IdCounts { idtp: 0, idfp: total_pred, idfn: total_scored_gt };
    }

    // Pairwise weights per (gt id, pred id): frames whose boxes match at
    // alpha_iou, split into scored (occluded-mode) and overall coverage.
    let mut pred_by_id_frame: BTreeMap<(u64, u64), &PredEntry> = BTreeMap::new();
    for e in &pred.entries {
        pred_by_id_frame.insert((e.id, e.frame), e);
    }
    let gt_index: BTreeMap<u64, usize> = gt_ids.iter().enumerate().map(|(i, &g)| (g, i)).collect();

    let np = pred_ids.len();
    let mut w_scored = vec![0u64; gt_ids.len() * np];
    let mut w_cover = vec![0u64; gt_ids.len() * np];
    for b in &gt.boxes {
        let gi = gt_index[&b.id];
        let scored = !occluded_only || b.occluded(params.v_thresh);
        for (pi, pid) in pred_ids.iter().enumerate() {
            if let Some(e) = pred_by_id_frame.get(&(*pid, b.frame)) {
                if iou(&b.bbox, e.top1()) >= params.alpha_iou {
                    w_cover[gi * np + pi] += 1;
                    if scored {
                        w_scored[gi * np + pi] += 1;
                    }
                }
            }
        }
    }

    // Maximize scored overlap first, coverage second; both rewards fold into
    // one weight with the secondary term strictly dominated.
    let sec_bound = (gt.boxes.len() + pred.entries.len() + 1) as f64;
    let mut best_combined: f64 = 0.0;
    let combined = |g: usize, p: usize| -> f64 {
        w_scored[g * np + p] as f64 * sec_bound + w_cover[g * np + p] as f64
    };
    for g in 0..gt_ids.len() {
        for p in 0..np {
            best_combined = best_combined.max(combined(g, p));
        }
    }
    let mut cost = CostMatrix::filled(gt_ids.len(), np, 0.0);
    for g in 0..gt_ids.len() {
        for p in 0..np {
            cost.set(g, p, best_combined - combined(g, p));
        }
    }
    let chosen = solve_assignment(&cost);
    let idtp: u64 = chosen.iter().map(|&(g, p)| w_scored[g * np + p]).sum();
    let covered: u64 = chosen.iter().map(|&(g, p)| w_cover[g * np + p]).sum();

    IdCounts { idtp, idfp: total_pred - covered, idfn: total_scored_gt - idtp }
}

/// CLEAR-MOT counts with frame-to-frame correspondence carry-over.
///
/// In occluded mode the per-frame matching still runs over all ground truth
/// (a prediction covering a visible person is not penalized), but true
/// positives, misses, the GT denominator and id switches only count occluded
/// ground truth.
pub fn mota_counts(
    gt: &SequenceGt,
    pred: &SequencePred,
    params: &EvalParams,
    occluded_only: bool,
) -> MotaCounts {
    let gtf = by_frame_gt(gt);
    let prf = by_frame_pred(pred);
    let mut frames: Vec<u64> = gtf.keys().chain(prf.keys()).copied().collect();
    frames.sort_unstable();
    frames.dedup();

    let mut counts = MotaCounts::default();
    // last prediction id ever matched to each ground-truth id
    let mut last_match: BTreeMap<u64, u64> = BTreeMap::new();
    // correspondence surviving from the previous frame
    let mut corr: BTreeMap<u64, u64> = BTreeMap::new();

    for f in frames {
        let gts = gtf.get(&f).cloned().unwrap_or_default();
        let preds = prf.get(&f).cloned().unwrap_or_default();

        let mut gt_matched = vec![false; gts.len()];
        let mut pred_matched = vec![false; preds.len()];
        let mut new_corr: BTreeMap<u64, u64> = BTreeMap::new();

        // keep surviving correspondences first
        for (g, gtb) in gts.iter().enumerate() {
            if let Some(&pid) = corr.get(&gtb.id) {
                if let Some(p) = preds.iter().position(|e| e.id == pid) {
                    if !pred_matched[p] && iou(&gtb.bbox, preds[p].top1()) >= params.alpha_iou {
                        gt_matched[g] = true;
                        pred_matched[p] = true;
                        new_corr.insert(gtb.id, pid);
                    }
                }
            }
        }

        // optimal assignment for the rest
        let free_g: Vec<usize> = (0..gts.len()).filter(|&g| !gt_matched[g]).collect();
        let free_p: Vec<usize> = (0..preds.len()).filter(|&p| !pred_matched[p]).collect();
        if !free_g.is_empty() && !free_p.is_empty() {
            let mut cost = CostMatrix::filled(free_g.len(), free_p.len(), f64::INFINITY);
            for (r, &g) in free_g.iter().enumerate() {
                for (c, &p) in free_p.iter().enumerate() {
                    let ov = iou(&gts[g].bbox, preds[p].top1());
                    if ov >= params.alpha_iou {
                        cost.set(r, c, 1.0 - ov);
                    }
                }
            }
            for (r, c) in solve_assignment(&cost) {
                let (g, p) = (free_g[r], free_p[c]);
                gt_matched[g] = true;
                pred_matched[p] = true;
                let gid = gts[g].id;
                let pid = preds[p].id;
                if let Some(&prev) = last_match.get(&gid) {
                    if prev != pid {
                        let count_switch = !occluded_only || gts[g].occluded(params.v_thresh);
                        if count_switch {
                            counts.id_switches += 1;
                        }
                    }
                }
                new_corr.insert(gid, pid);
            }
        }

        for (gid, pid) in &new_corr {
            last_match.insert(*gid, *pid);
        }
        corr = new_corr;

        for (g, gtb) in gts.iter().enumerate() {
            let in_scope = !occluded_only || gtb.occluded(params.v_thresh);
            if in_scope {
                counts.gt_total += 1;
                if gt_matched[g] {
                    counts.tp += 1;
                } else {
                    counts.misses += 1;
                }
            }
        }
        counts.fp += pred_matched.iter().filter(|m| !**m).count() as u64;
    }
    counts
}

/// Run the full evaluation for one sequence.
pub fn evaluate(gt: &SequenceGt, pred: &SequencePred, params: &EvalParams) -> MetricReport {
    MetricReport {
        topk_occl: topk_counts(gt, pred, params, true, None),
        topk_all: topk_counts(gt, pred, params, false, None),
        top1_occl: topk_counts(gt, pred, params, true, Some(1)),
        top1_all: topk_counts(gt, pred, params, false, Some(1)),
        idf1_occl: idf1_counts(gt, pred, params, true),
        idf1_all: idf1_counts(gt, pred, params, false),
        mota_occl: mota_counts(gt, pred, params, true),
        mota_all: mota_counts(gt, pred, params, false),
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
