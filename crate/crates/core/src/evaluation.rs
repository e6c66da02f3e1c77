//! Pedestrian detection metrics: score-ordered matching, COCO-style AP,
//! log-average miss rate over FPPI, occlusion/height subsets and IoU sweeps.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, occlusion_ratio, BBox};
use crate::nms::ScoredBox;

/// Miss rates are clamped to this before taking logs.
pub const MR_FLOOR: f64 = 1e-4;
/// Number of log-spaced FPPI reference points in `[1e-2, 1e0]`.
pub const MR_REF_POINTS: usize = 9;
pub const AP_RECALL_POINTS: usize = 101;

/// `0.50, 0.55, ..., 0.95`.
pub fn coco_iou_thresholds() -> Vec<f64> {
    (0..10).map(|k| 0.5 + 0.05 * k as f64).collect()
}

/// FPPI values at which the miss rate is sampled.
pub fn fppi_reference_points() -> Vec<f64> {
    let step = 2.0 / (MR_REF_POINTS - 1) as f64;
    (0..MR_REF_POINTS)
        .map(|k| 10f64.powf(-2.0 + step * k as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInstance {
    pub full: BBox,
    pub visible: Option<BBox>,
    pub head: Option<BBox>,
    pub ignore: bool,
}

impl GroundTruthInstance {
    pub fn new(full: BBox) -> Self {
        Self {
            full,
            visible: None,
            head: None,
            ignore: false,
        }
    }

    pub fn with_visible(mut self, visible: BBox) -> Self {
        self.visible = Some(visible);
        self
    }

    pub fn ignored(mut self) -> Self {
        self.ignore = true;
        self
    }

    pub fn height(&self) -> f64 {
        self.full.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetOutcome {
    TruePositive {
        gt: usize,
    },
    FalsePositive,
    /// Matched only an ignore instance; neither credited nor penalised.
    Ignored {
        gt: usize,
    },
}

/// Matching result for one image at one IoU threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMatch {
    /// Detection indices in the order they were matched.
    pub order: Vec<usize>,
    /// Scores parallel to `order`.
    pub scores: Vec<f64>,
    pub outcomes: Vec<DetOutcome>,
    /// Non-ignore ground truth count.
    pub num_gt: usize,
    pub gt_matched: Vec<Option<usize>>,
}

impl ImageMatch {
    pub fn true_positives(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| matches!(o, DetOutcome::TruePositive { .. }))
            .count()
    }

    pub fn false_positives(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| matches!(o, DetOutcome::FalsePositive))
            .count()
    }

    pub fn false_negatives(&self) -> usize {
        self.num_gt - self.true_positives()
    }
}

/// Descending score; equal scores by box geometry, then input index.
///
/// Breaking ties on geometry rather than position keeps the match result
/// independent of how equal-score detections happen to be ordered.
fn detection_order(dets: &[ScoredBox]) -> Vec<usize> {
    let key = |b: &BBox| [b.x, b.y, b.w, b.h];
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .total_cmp(&dets[a].score)
            .then_with(|| {
                key(&dets[a].bbox)
                    .iter()
                    .zip(key(&dets[b].bbox).iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
            .then(a.cmp(&b))
    });
    order
}

/// Greedy matching in descending score order.
///
/// Each detection takes the unmatched non-ignore instance with the highest
/// IoU at or above `iou_thresh`. Failing that it is absorbed by the best
/// overlapping ignore instance, and otherwise counts as a false positive.
pub fn match_detections(
    dets: &[ScoredBox],
    gts: &[GroundTruthInstance],
    iou_thresh: f64,
) -> ImageMatch {
    let order = detection_order(dets);
    let mut gt_matched = vec![None; gts.len()];
    let mut outcomes = Vec::with_capacity(dets.len());
    for &d in &order {
        let db = &dets[d].bbox;
        let mut best: Option<(usize, f64)> = None;
        let mut best_ignore: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            let o = iou(db, &gt.full);
            if o < iou_thresh {
                continue;
            }
            let slot = if gt.ignore {
                &mut best_ignore
            } else if gt_matched[g].is_none() {
                &mut best
            } else {
                continue;
            };
            if slot.is_none_or(|(_, bo)| o > bo) {
                *slot = Some((g, o));
            }
        }
        let outcome = match (best, best_ignore) {
            (Some((g, _)), _) => {
                gt_matched[g] = Some(d);
                DetOutcome::TruePositive { gt: g }
            }
            (None, Some((g, _))) => DetOutcome::Ignored { gt: g },
            (None, None) => DetOutcome::FalsePositive,
        };
        outcomes.push(outcome);
    }
    ImageMatch {
        scores: order.iter().map(|&d| dets[d].score).collect(),
        order,
        outcomes,
        num_gt: gts.iter().filter(|g| !g.ignore).count(),
        gt_matched,
    }
}

/// Cumulative TP/FP at each distinct score, highest score first.
fn cumulative_counts(logs: &[ImageMatch]) -> Vec<(f64, usize, usize)> {
    let mut scored: Vec<(f64, bool)> = logs
        .iter()
        .flat_map(|m| {
            m.scores
                .iter()
                .zip(&m.outcomes)
                .filter_map(|(&s, o)| match o {
                    DetOutcome::TruePositive { .. } => Some((s, true)),
                    DetOutcome::FalsePositive => Some((s, false)),
                    DetOutcome::Ignored { .. } => None,
                })
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, &(s, is_tp)) in scored.iter().enumerate() {
        if is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        // emit once per tie group
        if scored.get(i + 1).is_none_or(|n| n.0 != s) {
            out.push((s, tp, fp));
        }
    }
    out
}

fn total_gt(logs: &[ImageMatch]) -> usize {
    logs.iter().map(|m| m.num_gt).sum()
}

/// `(recall, precision)` at every distinct score threshold.
pub fn precision_recall(logs: &[ImageMatch]) -> Result<Vec<(f64, f64)>> {
    let n_gt = total_gt(logs);
    if n_gt == 0 {
        return Err(Error::NoGroundTruth);
    }
    Ok(cumulative_counts(logs)
        .into_iter()
        .map(|(_, tp, fp)| (tp as f64 / n_gt as f64, tp as f64 / (tp + fp) as f64))
        .collect())
}

/// Area under the interpolated precision/recall curve, sampled at the 101
/// recall levels `0, 0.01, ..., 1`.
pub fn average_precision(logs: &[ImageMatch]) -> Result<f64> {
    let pr = precision_recall(logs)?;
    let recall: Vec<f64> = pr.iter().map(|p| p.0).collect();
    let mut precision: Vec<f64> = pr.iter().map(|p| p.1).collect();
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut sum = 0.0;
    let mut i = 0;
    for k in 0..AP_RECALL_POINTS {
        let r = k as f64 / (AP_RECALL_POINTS - 1) as f64;
        while i < recall.len() && recall[i] < r {
            i += 1;
        }
        if i == recall.len() {
            break;
        }
        sum += precision[i];
    }
    Ok(sum / AP_RECALL_POINTS as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FppiCurvePoint {
    pub fppi: f64,
    pub miss_rate: f64,
    pub score_threshold: f64,
}

/// Miss rate against false positives per image, starting from the
/// no-detection point `(0, 1)` and stepping through each distinct score.
pub fn fppi_curve(logs: &[ImageMatch]) -> Result<Vec<FppiCurvePoint>> {
    let n_gt = total_gt(logs);
    if n_gt == 0 {
        return Err(Error::NoGroundTruth);
    }
    let n_img = logs.len() as f64;
    let mut curve = vec![FppiCurvePoint {
        fppi: 0.0,
        miss_rate: 1.0,
        score_threshold: f64::INFINITY,
    }];
    curve.extend(
        cumulative_counts(logs)
            .into_iter()
            .map(|(s, tp, fp)| FppiCurvePoint {
                fppi: fp as f64 / n_img,
                miss_rate: 1.0 - tp as f64 / n_gt as f64,
                score_threshold: s,
            }),
    );
    Ok(curve)
}

/// Geometric mean of the miss rate sampled at nine log-spaced FPPI values
/// in `[1e-2, 1]`.
///
/// At each reference value the sample is the miss rate of the last curve
/// point whose FPPI does not exceed it, or the first point if there is none.
pub fn log_average_miss_rate(curve: &[FppiCurvePoint]) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let refs = fppi_reference_points();
    let mut log_sum = 0.0;
    for r in &refs {
        let p = curve
            .iter()
            .rev()
            .find(|p| p.fppi <= *r)
            .unwrap_or(&curve[0]);
        log_sum += p.miss_rate.max(MR_FLOOR).ln();
    }
    Ok((log_sum / refs.len() as f64).exp())
}

/// Interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
    pub hi_inclusive: bool,
}

impl Interval {
    pub const fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_inclusive: true,
            hi_inclusive: true,
        }
    }

    pub const fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_inclusive: false,
            hi_inclusive: false,
        }
    }

    /// `[lo, hi)`.
    pub const fn half_open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_inclusive: true,
            hi_inclusive: false,
        }
    }

    pub const fn at_least(lo: f64) -> Self {
        Self::closed(lo, f64::INFINITY)
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_inclusive {
            v >= self.lo
        } else {
            v > self.lo
        };
        let below = if self.hi_inclusive {
            v <= self.hi
        } else {
            v < self.hi
        };
        above && below
    }

    fn is_consistent(&self) -> bool {
        self.lo <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFilter {
    pub name: String,
    pub occlusion: Interval,
    pub height: Interval,
}

const ANY_OCCLUSION: Interval = Interval::closed(0.0, 1.0);
const ANY_HEIGHT: Interval = Interval::closed(0.0, f64::INFINITY);

impl SubsetFilter {
    pub fn new(name: &str, occlusion: Interval, height: Interval) -> Result<Self> {
        if !occlusion.is_consistent() || !height.is_consistent() {
            return Err(Error::InvalidParameter(format!(
                "inconsistent bounds for subset {name}"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            occlusion,
            height,
        })
    }

    /// Height >= 50 px, occlusion < 35%.
    pub fn reasonable() -> Self {
        Self::new(
            "reasonable",
            Interval::half_open(0.0, 0.35),
            Interval::at_least(50.0),
        )
        .unwrap()
    }

    /// 50 <= height < 75 px.
    pub fn small() -> Self {
        Self::new("small", ANY_OCCLUSION, Interval::half_open(50.0, 75.0)).unwrap()
    }

    /// Occlusion >= 35%.
    pub fn heavy() -> Self {
        Self::new("heavy", Interval::closed(0.35, 1.0), ANY_HEIGHT).unwrap()
    }

    /// The part of `reasonable` with 10% < occlusion < 35%.
    pub fn partial() -> Self {
        Self::new(
            "partial",
            Interval::open(0.10, 0.35),
            Interval::at_least(50.0),
        )
        .unwrap()
    }

    /// The part of `reasonable` with occlusion <= 10%.
    pub fn bare() -> Self {
        Self::new(
            "bare",
            Interval::closed(0.0, 0.10),
            Interval::at_least(50.0),
        )
        .unwrap()
    }

    /// Height >= 20 px, occlusion <= 80%.
    pub fn all() -> Self {
        Self::new("all", Interval::closed(0.0, 0.8), Interval::at_least(20.0)).unwrap()
    }

    /// No restriction at all.
    pub fn everything() -> Self {
        Self::new("everything", ANY_OCCLUSION, ANY_HEIGHT).unwrap()
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "reasonable" => Self::reasonable(),
            "small" => Self::small(),
            "heavy" => Self::heavy(),
            "partial" => Self::partial(),
            "bare" => Self::bare(),
            "all" => Self::all(),
            "everything" | "none" => Self::everything(),
            _ => return None,
        })
    }

    pub fn filters_occlusion(&self) -> bool {
        self.occlusion != ANY_OCCLUSION
    }

    /// Whether an instance falls inside the subset.
    pub fn admits(&self, gt: &GroundTruthInstance) -> Result<bool> {
        if !self.height.contains(gt.height()) {
            return Ok(false);
        }
        if !self.filters_occlusion() {
            return Ok(true);
        }
        let Some(visible) = gt.visible else {
            return Err(Error::MissingVisibleBox(0));
        };
        match occlusion_ratio(&visible, &gt.full) {
            Ok(stats) => Ok(self.occlusion.contains(stats.occlusion)),
            Err(_) => Ok(false),
        }
    }
}

/// Marks every instance outside `filter` as ignore.
pub fn apply_subset(
    gts: &[GroundTruthInstance],
    filter: &SubsetFilter,
) -> Result<Vec<GroundTruthInstance>> {
    gts.iter()
        .enumerate()
        .map(|(i, g)| {
            if g.ignore {
                return Ok(*g);
            }
            let inside = filter.admits(g).map_err(|e| match e {
                Error::MissingVisibleBox(_) => Error::MissingVisibleBox(i),
                e => e,
            })?;
            let mut g = *g;
            g.ignore = !inside;
            Ok(g)
        })
        .collect()
}

/// Detections and ground truth of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInput {
    pub id: String,
    pub dets: Vec<ScoredBox>,
    pub gts: Vec<GroundTruthInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Threshold for recall and MR-2.
    pub iou_thresh: f64,
    /// Detections scoring below this are dropped before matching.
    pub min_score: f64,
    pub parallel: bool,
    pub keep_image_logs: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            iou_thresh: 0.5,
            min_score: 0.0,
            parallel: true,
            keep_image_logs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub ignored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetMetrics {
    pub subset: String,
    #[serde(rename = "mAP")]
    pub map: f64,
    #[serde(rename = "AP50")]
    pub ap50: f64,
    pub recall: f64,
    #[serde(rename = "MR-2")]
    pub mr2: f64,
    pub images: usize,
    pub gt: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub image_logs: Vec<ImageSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_thresh: f64,
    pub min_score: f64,
    pub mr_floor: f64,
    pub subsets: Vec<SubsetMetrics>,
    /// Requested subsets that admitted no ground truth and have no metrics.
    #[serde(default)]
    pub empty_subsets: Vec<String>,
}

fn prepare(
    images: &[ImageInput],
    filter: &SubsetFilter,
    min_score: f64,
) -> Result<Vec<ImageInput>> {
    images
        .iter()
        .map(|img| {
            Ok(ImageInput {
                id: img.id.clone(),
                dets: img
                    .dets
                    .iter()
                    .filter(|d| d.score >= min_score)
                    .copied()
                    .collect(),
                gts: apply_subset(&img.gts, filter)?,
            })
        })
        .collect()
}

/// Matches every image at one threshold; the output order follows `images`.
pub fn match_images(images: &[ImageInput], iou_thresh: f64, parallel: bool) -> Vec<ImageMatch> {
    let f = |img: &ImageInput| match_detections(&img.dets, &img.gts, iou_thresh);
    if parallel {
        images.par_iter().map(f).collect()
    } else {
        images.iter().map(f).collect()
    }
}

fn recall_of(logs: &[ImageMatch]) -> Result<f64> {
    let n_gt = total_gt(logs);
    if n_gt == 0 {
        return Err(Error::NoGroundTruth);
    }
    let tp: usize = logs.iter().map(ImageMatch::true_positives).sum();
    Ok(tp as f64 / n_gt as f64)
}

pub fn evaluate_subset(
    images: &[ImageInput],
    filter: &SubsetFilter,
    opts: &EvalOptions,
) -> Result<SubsetMetrics> {
    let images = prepare(images, filter, opts.min_score)?;
    let mut aps = Vec::new();
    for t in coco_iou_thresholds() {
        aps.push(average_precision(&match_images(&images, t, opts.parallel))?);
    }
    let at_thresh = match_images(&images, opts.iou_thresh, opts.parallel);
    let image_logs = if opts.keep_image_logs {
        images
            .iter()
            .zip(&at_thresh)
            .map(|(img, m)| ImageSummary {
                image_id: img.id.clone(),
                tp: m.true_positives(),
                fp: m.false_positives(),
                fn_: m.false_negatives(),
                ignored: m.outcomes.len() - m.true_positives() - m.false_positives(),
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(SubsetMetrics {
        subset: filter.name.clone(),
        map: aps.iter().sum::<f64>() / aps.len() as f64,
        ap50: aps[0],
        recall: recall_of(&at_thresh)?,
        mr2: log_average_miss_rate(&fppi_curve(&at_thresh)?)?,
        images: images.len(),
        gt: total_gt(&at_thresh),
        image_logs,
    })
}

/// Evaluates every subset. A subset without ground truth is listed in
/// `empty_subsets` rather than failing the whole report.
pub fn evaluate(
    images: &[ImageInput],
    filters: &[SubsetFilter],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let mut subsets = Vec::new();
    let mut empty_subsets = Vec::new();
    for f in filters {
        match evaluate_subset(images, f, opts) {
            Ok(m) => subsets.push(m),
            Err(Error::NoGroundTruth) => empty_subsets.push(f.name.clone()),
            Err(e) => return Err(e),
        }
    }
    Ok(EvalReport {
        iou_thresh: opts.iou_thresh,
        min_score: opts.min_score,
        mr_floor: MR_FLOOR,
        subsets,
        empty_subsets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub iou: f64,
    #[serde(rename = "MR-2")]
    pub mr2: f64,
    #[serde(rename = "AP")]
    pub ap: f64,
    pub tp: usize,
}

/// Recomputes MR-2 and AP at every threshold of a strictly increasing grid.
pub fn sweep_iou(
    images: &[ImageInput],
    grid: &[f64],
    filter: &SubsetFilter,
    opts: &EvalOptions,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty IoU grid".into()));
    }
    if grid.iter().any(|t| !(*t > 0.0 && *t < 1.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "IoU grid must be strictly increasing inside (0, 1)".into(),
        ));
    }
    let images = prepare(images, filter, opts.min_score)?;
    grid.iter()
        .map(|&t| {
            let logs = match_images(&images, t, opts.parallel);
            Ok(SweepRow {
                iou: t,
                mr2: log_average_miss_rate(&fppi_curve(&logs)?)?,
                ap: average_precision(&logs)?,
                tp: logs.iter().map(ImageMatch::true_positives).sum(),
            })
        })
        .collect()
}

fn csv_string<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

#[derive(Serialize)]
struct SubsetCsvRow<'a> {
    subset: &'a str,
    #[serde(rename = "mAP")]
    map: f64,
    #[serde(rename = "AP50")]
    ap50: f64,
    recall: f64,
    #[serde(rename = "MR-2")]
    mr2: f64,
    images: usize,
    gt: usize,
}

impl EvalReport {
    /// One row per subset.
    pub fn to_csv(&self) -> String {
        let rows: Vec<SubsetCsvRow> = self
            .subsets
            .iter()
            .map(|s| SubsetCsvRow {
                subset: &s.subset,
                map: s.map,
                ap50: s.ap50,
                recall: s.recall,
                mr2: s.mr2,
                images: s.images,
                gt: s.gt,
            })
            .collect();
        csv_string(&rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    csv_string(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(x: f64, y: f64, w: f64, h: f64) -> GroundTruthInstance {
        GroundTruthInstance::new(BBox::new(x, y, w, h))
    }

    fn det(x: f64, y: f64, w: f64, h: f64, s: f64) -> ScoredBox {
        ScoredBox::new(BBox::new(x, y, w, h), s, 0)
    }

    #[test]
    fn match_examples() {
        let g = [gt(0.0, 0.0, 10.0, 20.0)];
        let m = match_detections(&[det(0.0, 0.0, 10.0, 20.0, 0.9)], &g, 0.5);
        assert_eq!(
            (m.true_positives(), m.false_positives(), m.false_negatives()),
            (1, 0, 0)
        );

        let m = match_detections(&[det(100.0, 0.0, 10.0, 20.0, 0.9)], &g, 0.5);
        assert_eq!(
            (m.true_positives(), m.false_positives(), m.false_negatives()),
            (0, 1, 1)
        );
    }

    #[test]
    fn second_detection_on_same_gt_is_false_positive() {
        let g = [gt(0.0, 0.0, 10.0, 10.0)];
        // IoU 0.6: shift by 2.5 -> 75 / 125
        let off = det(2.5, 0.0, 10.0, 10.0, 0.8);
        assert!((iou(&off.bbox, &g[0].full) - 0.6).abs() < 1e-12);
        let m = match_detections(&[off, det(0.0, 0.0, 10.0, 10.0, 0.9)], &g, 0.5);
        assert_eq!(m.order, vec![1, 0]);
        assert_eq!(
            m.outcomes,
            vec![
                DetOutcome::TruePositive { gt: 0 },
                DetOutcome::FalsePositive
            ]
        );
    }

    #[test]
    fn ignore_instances_absorb_without_credit() {
        let g = [gt(0.0, 0.0, 10.0, 10.0).ignored()];
        let m = match_detections(
            &[
                det(0.0, 0.0, 10.0, 10.0, 0.9),
                det(0.5, 0.0, 10.0, 10.0, 0.8),
            ],
            &g,
            0.5,
        );
        assert_eq!(m.num_gt, 0);
        assert_eq!(m.false_positives(), 0);
        assert_eq!(m.true_positives(), 0);
        assert_eq!(m.false_negatives(), 0);
    }

    #[test]
    fn prefers_real_instance_over_ignore() {
        let g = [gt(0.0, 0.0, 10.0, 10.0).ignored(), gt(1.0, 0.0, 10.0, 10.0)];
        let m = match_detections(&[det(0.0, 0.0, 10.0, 10.0, 0.9)], &g, 0.5);
        assert_eq!(m.outcomes, vec![DetOutcome::TruePositive { gt: 1 }]);
    }

    fn logs_for(dets: &[ScoredBox], gts: &[GroundTruthInstance]) -> Vec<ImageMatch> {
        vec![match_detections(dets, gts, 0.5)]
    }

    #[test]
    fn ap_examples() {
        let gts = [gt(0.0, 0.0, 10.0, 10.0), gt(50.0, 0.0, 10.0, 10.0)];
        let perfect = [
            det(0.0, 0.0, 10.0, 10.0, 0.9),
            det(50.0, 0.0, 10.0, 10.0, 0.8),
        ];
        assert_eq!(average_precision(&logs_for(&perfect, &gts)).unwrap(), 1.0);
        assert_eq!(average_precision(&logs_for(&[], &gts)).unwrap(), 0.0);
        assert_eq!(
            average_precision(&logs_for(&[], &[])).unwrap_err(),
            Error::NoGroundTruth
        );
    }

    #[test]
    fn ap_of_tp_fp_tp() {
        let gts = [gt(0.0, 0.0, 10.0, 10.0), gt(50.0, 0.0, 10.0, 10.0)];
        let dets = [
            det(0.0, 0.0, 10.0, 10.0, 0.9),
            det(200.0, 0.0, 10.0, 10.0, 0.8),
            det(50.0, 0.0, 10.0, 10.0, 0.7),
        ];
        let logs = logs_for(&dets, &gts);
        let pr = precision_recall(&logs).unwrap();
        assert_eq!(pr, vec![(0.5, 1.0), (0.5, 0.5), (1.0, 2.0 / 3.0)]);
        // recall levels 0..=0.50 see precision 1, 0.51..=1 see 2/3
        let want = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
        assert!((average_precision(&logs).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn mr_no_detections_is_one() {
        let logs = logs_for(&[], &[gt(0.0, 0.0, 10.0, 10.0)]);
        let curve = fppi_curve(&logs).unwrap();
        assert_eq!(log_average_miss_rate(&curve).unwrap(), 1.0);
    }

    #[test]
    fn mr_perfect_hits_floor() {
        let gts = [gt(0.0, 0.0, 10.0, 10.0)];
        let logs = logs_for(&[det(0.0, 0.0, 10.0, 10.0, 0.9)], &gts);
        let mr = log_average_miss_rate(&fppi_curve(&logs).unwrap()).unwrap();
        assert!((mr - MR_FLOOR).abs() < 1e-18);
    }

    #[test]
    fn mr_stepwise_grid() {
        // ten images with one instance each: five confident hits, one false
        // positive (fppi 0.1), three more hits.
        let mut logs = Vec::new();
        for i in 0..10 {
            let gts = [gt(0.0, 0.0, 10.0, 10.0)];
            let dets: Vec<ScoredBox> = match i {
                0..=4 => vec![det(0.0, 0.0, 10.0, 10.0, 0.9 - 0.01 * i as f64)],
                5 => vec![det(100.0, 0.0, 10.0, 10.0, 0.8)],
                6..=8 => vec![det(0.0, 0.0, 10.0, 10.0, 0.7 - 0.01 * i as f64)],
                _ => vec![],
            };
            logs.push(match_detections(&dets, &gts, 0.5));
        }
        let mr = log_average_miss_rate(&fppi_curve(&logs).unwrap()).unwrap();
        // refs 10^-2 .. 10^-1.25 sample 0.5; refs 10^-1 .. 10^0 sample 0.2
        let want = ((4.0 * 0.5f64.ln() + 5.0 * 0.2f64.ln()) / 9.0).exp();
        assert!((mr - want).abs() < 1e-12, "{mr} vs {want}");
    }

    #[test]
    fn empty_curve_is_an_error() {
        assert_eq!(log_average_miss_rate(&[]).unwrap_err(), Error::EmptyCurve);
    }

    #[test]
    fn reference_points_span_two_decades() {
        let r = fppi_reference_points();
        assert_eq!(r.len(), 9);
        assert_eq!(r[0], 0.01);
        assert_eq!(r[4], 0.1);
        assert_eq!(r[8], 1.0);
    }

    fn occluded(occ: f64) -> GroundTruthInstance {
        // 100 px tall, visible part keeps (1 - occ) of the height
        let full = BBox::new(0.0, 0.0, 40.0, 100.0);
        GroundTruthInstance::new(full).with_visible(BBox::new(0.0, 0.0, 40.0, 100.0 * (1.0 - occ)))
    }

    #[test]
    fn subset_examples() {
        let bare = SubsetFilter::bare();
        let partial = SubsetFilter::partial();
        assert!(!apply_subset(&[occluded(0.05)], &bare).unwrap()[0].ignore);
        assert!(apply_subset(&[occluded(0.20)], &bare).unwrap()[0].ignore);
        assert!(!apply_subset(&[occluded(0.20)], &partial).unwrap()[0].ignore);
    }

    #[test]
    fn subset_requires_visible_boxes() {
        let g = [occluded(0.1), gt(0.0, 0.0, 10.0, 60.0)];
        assert_eq!(
            apply_subset(&g, &SubsetFilter::reasonable()).unwrap_err(),
            Error::MissingVisibleBox(1)
        );
        // height-only subsets do not need them
        assert!(apply_subset(&g, &SubsetFilter::small()).is_ok());
    }

    #[test]
    fn subset_height_bounds() {
        let short = GroundTruthInstance::new(BBox::new(0.0, 0.0, 10.0, 49.0))
            .with_visible(BBox::new(0.0, 0.0, 10.0, 49.0));
        assert!(apply_subset(&[short], &SubsetFilter::reasonable()).unwrap()[0].ignore);
        let small = GroundTruthInstance::new(BBox::new(0.0, 0.0, 10.0, 60.0));
        assert!(!apply_subset(&[small], &SubsetFilter::small()).unwrap()[0].ignore);
    }

    #[test]
    fn inconsistent_bounds_rejected() {
        assert!(SubsetFilter::new("x", Interval::closed(0.5, 0.1), ANY_HEIGHT).is_err());
    }

    #[test]
    fn sweep_grid_validation() {
        let imgs = [ImageInput {
            id: "a".into(),
            dets: vec![],
            gts: vec![gt(0.0, 0.0, 10.0, 10.0)],
        }];
        let f = SubsetFilter::everything();
        let o = EvalOptions::default();
        assert!(sweep_iou(&imgs, &[], &f, &o).is_err());
        assert!(sweep_iou(&imgs, &[0.6, 0.5], &f, &o).is_err());
        assert!(sweep_iou(&imgs, &[0.5, 1.0], &f, &o).is_err());
        assert_eq!(sweep_iou(&imgs, &[0.5], &f, &o).unwrap().len(), 1);
    }

    #[test]
    fn csv_has_one_row_per_subset() {
        let imgs = [ImageInput {
            id: "a".into(),
            dets: vec![det(0.0, 0.0, 10.0, 60.0, 0.9)],
            gts: vec![gt(0.0, 0.0, 10.0, 60.0)],
        }];
        let r = evaluate(
            &imgs,
            &[SubsetFilter::everything(), SubsetFilter::small()],
            &EvalOptions::default(),
        )
        .unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "subset,mAP,AP50,recall,MR-2,images,gt");
        assert_eq!(lines.len(), 3);
        assert!(
            lines[1].starts_with("everything,1.0,1.0,1.0,0.0001"),
            "{}",
            lines[1]
        );
    }

    #[test]
    fn subset_without_ground_truth_is_listed_not_fatal() {
        let imgs = [ImageInput {
            id: "a".into(),
            dets: vec![det(0.0, 0.0, 10.0, 30.0, 0.9)],
            gts: vec![gt(0.0, 0.0, 10.0, 30.0)],
        }];
        let r = evaluate(
            &imgs,
            &[SubsetFilter::small(), SubsetFilter::everything()],
            &EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(r.subsets.len(), 1);
        assert_eq!(r.subsets[0].subset, "everything");
        assert_eq!(r.empty_subsets, vec!["small".to_string()]);
    }
}
