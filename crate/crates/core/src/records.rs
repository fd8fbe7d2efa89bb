//! Ground-truth and prediction containers shared by the tracker and metrics.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::BBox;

/// One annotated ground-truth box.
#[derive(Debug, Clone, PartialEq)]
pub struct GtBox {
    pub frame: u64,
    pub id: u64,
    pub bbox: BBox,
    /// Fraction of the person visible to the camera, in [0, 1].
    pub visibility: f64,
    /// MOT class id; pedestrians are class 1.
    pub class: u32,
}

impl GtBox {
    /// A person counts as occluded when less than `v_thresh` of them is visible.
    pub fn occluded(&self, v_thresh: f64) -> bool {
        self.visibility < v_thresh
    }
}

/// Ground truth for one sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceGt {
    pub boxes: Vec<GtBox>,
}

/// One detector output box.
#[derive(Debug, Clone, PartialEq)]
pub struct DetBox {
    pub frame: u64,
    pub bbox: BBox,
    pub confidence: f64,
}

/// Detections for one sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceDet {
    pub boxes: Vec<DetBox>,
}

/// One reported person: the Top-1 box is `hyps[0]`, further entries are the
/// sampled location hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct PredEntry {
    pub frame: u64,
    pub id: u64,
    pub occluded: bool,
    pub gamma: Option<f64>,
    pub hyps: Vec<BBox>,
}

impl PredEntry {
    pub fn top1(&self) -> &BBox {
        &self.hyps[0]
    }
}

/// Predictions for one sequence, ordered by (frame, id).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequencePred {
    pub name: String,
    pub entries: Vec<PredEntry>,
}

impl SequenceGt {
    pub fn frames(&self) -> impl Iterator<Item = u64> + '_ {
        let mut fs: Vec<u64> = self.boxes.iter().map(|b| b.frame).collect();
        fs.sort_unstable();
        fs.dedup();
        fs.into_iter()
    }

    /// Keep only the visible boxes of each track, turning ground truth into
    /// the "groundtruth detections + groundtruth tracks" oracle input.
    pub fn visible_tracks(&self, v_thresh: f64) -> SequencePred {
        let mut entries: Vec<PredEntry> = self
            .boxes
            .iter()
            .filter(|b| !b.occluded(v_thresh))
            .map(|b| PredEntry {
                frame: b.frame,
                id: b.id,
                occluded: false,
                gamma: None,
                hyps: alloc::vec![b.bbox],
            })
            .collect();
        entries.sort_by_key(|e| (e.frame, e.id));
        SequencePred { name: String::new(), entries }
    }

    /// Convert ground truth directly into predictions (perfect tracker).
    pub fn as_predictions(&self, v_thresh: f64) -> SequencePred {
        let mut entries: Vec<PredEntry> = self
            .boxes
            .iter()
            .map(|b| PredEntry {
                frame: b.frame,
                id: b.id,
                occluded: b.occluded(v_thresh),
                gamma: None,
                hyps: alloc::vec![b.bbox],
            })
            .collect();
        entries.sort_by_key(|e| (e.frame, e.id));
        SequencePred { name: String::new(), entries }
    }
}
