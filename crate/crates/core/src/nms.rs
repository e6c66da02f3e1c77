//! Greedy NMS, linear soft-NMS and visible-box guided NMS.
//!
//! All three are per-class: boxes with different `class_id` never suppress
//! each other. Equal scores are resolved by input position, lower first.

use serde::{Deserialize, Serialize};

use crate::geometry::{iou, BBox};

pub const DEFAULT_NMS_THRESH: f64 = 0.5;
pub const DEFAULT_SCORE_FLOOR: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredBox {
    pub bbox: BBox,
    pub score: f64,
    pub class_id: u32,
}

impl ScoredBox {
    pub const fn new(bbox: BBox, score: f64, class_id: u32) -> Self {
        Self {
            bbox,
            score,
            class_id,
        }
    }
}

/// A visible box and a full box regressed together for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDetection {
    pub visible: BBox,
    pub full: BBox,
    pub score: f64,
    pub class_id: u32,
}

impl PairedDetection {
    pub fn visible_scored(&self) -> ScoredBox {
        ScoredBox::new(self.visible, self.score, self.class_id)
    }

    pub fn full_scored(&self) -> ScoredBox {
        ScoredBox::new(self.full, self.score, self.class_id)
    }
}

/// Descending score, then ascending index.
fn by_priority(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Indices kept by greedy NMS, in descending score order.
///
/// A box is suppressed when its IoU with an already kept box of the same
/// class is strictly greater than `thresh`.
pub fn greedy_nms_indices(
    boxes: &[BBox],
    scores: &[f64],
    classes: &[u32],
    thresh: f64,
) -> Vec<usize> {
    assert_eq!(boxes.len(), scores.len());
    assert_eq!(boxes.len(), classes.len());
    let order = by_priority(scores);
    let mut suppressed = vec![false; boxes.len()];
    let mut keep = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        keep.push(i);
        for &j in &order[rank + 1..] {
            if !suppressed[j] && classes[j] == classes[i] && iou(&boxes[i], &boxes[j]) > thresh {
                suppressed[j] = true;
            }
        }
    }
    keep
}

fn unzip_scored(dets: &[ScoredBox]) -> (Vec<BBox>, Vec<f64>, Vec<u32>) {
    let boxes = dets.iter().map(|d| d.bbox).collect();
    let scores = dets.iter().map(|d| d.score).collect();
    let classes = dets.iter().map(|d| d.class_id).collect();
    (boxes, scores, classes)
}

pub fn greedy_nms(dets: &[ScoredBox], thresh: f64) -> Vec<ScoredBox> {
    let (boxes, scores, classes) = unzip_scored(dets);
    greedy_nms_indices(&boxes, &scores, &classes, thresh)
        .into_iter()
        .map(|i| dets[i])
        .collect()
}

/// Linear soft-NMS.
///
/// Repeatedly takes the highest current score; every remaining same-class box
/// with IoU `>= thresh` against it is rescored to `score * (1 - IoU)`. Boxes
/// whose score falls below `score_floor` are discarded. The result is in
/// descending final score.
pub fn soft_nms_linear(dets: &[ScoredBox], thresh: f64, score_floor: f64) -> Vec<ScoredBox> {
    soft_nms_linear_indexed(dets, thresh, score_floor)
        .into_iter()
        .map(|(i, score)| ScoredBox { score, ..dets[i] })
        .collect()
}

/// [`soft_nms_linear`] as `(input index, final score)` pairs.
pub fn soft_nms_linear_indexed(
    dets: &[ScoredBox],
    thresh: f64,
    score_floor: f64,
) -> Vec<(usize, f64)> {
    let mut pool: Vec<(usize, f64)> = dets
        .iter()
        .enumerate()
        .filter(|(_, d)| d.score >= score_floor)
        .map(|(i, d)| (i, d.score))
        .collect();
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let best = pool
            .iter()
            .enumerate()
            .max_by(|(_, (ia, a)), (_, (ib, b))| a.total_cmp(b).then(ib.cmp(ia)))
            .map(|(pos, _)| pos)
            .unwrap();
        let top = pool.swap_remove(best);
        out.push(top);
        let top_box = &dets[top.0];
        for (i, score) in pool.iter_mut() {
            if dets[*i].class_id != top_box.class_id {
                continue;
            }
            let o = iou(&top_box.bbox, &dets[*i].bbox);
            if o >= thresh {
                *score *= 1.0 - o;
            }
        }
        pool.retain(|(_, score)| *score >= score_floor);
    }
    // selection order is already non-increasing; the sort only pins ties
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

/// NMS on the visible boxes; the surviving indices select whole pairs.
pub fn vfg_nms_indices(dets: &[PairedDetection], thresh: f64) -> Vec<usize> {
    let boxes: Vec<BBox> = dets.iter().map(|d| d.visible).collect();
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    let classes: Vec<u32> = dets.iter().map(|d| d.class_id).collect();
    greedy_nms_indices(&boxes, &scores, &classes, thresh)
}

pub fn vfg_nms(dets: &[PairedDetection], thresh: f64) -> Vec<PairedDetection> {
    vfg_nms_indices(dets, thresh)
        .into_iter()
        .map(|i| dets[i])
        .collect()
}
