// Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use vfg_core::evaluation::{FppiCurvePoint, GroundTruthInstance};
use vfg_core::geometry::BBox;
use vfg_core::nms::ScoredBox;
use vfg_core::sim::SimRng;

pub fn rng(seed: u64) -> SimRng {
    vfg_core::sim::rng_from_seed(seed)
}

/// Random box inside a `span x span` canvas, sides in `[1, max_side]`.
pub fn random_box(r: &mut SimRng, span: f64, max_side: f64) -> BBox {
    let w = r.random_range(1.0..=max_side);
    let h = r.random_range(1.0..=max_side);
    BBox::new(r.random_range(0.0..=span), r.random_range(0.0..=span), w, h)
}

pub fn iou_oracle(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let ih = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter / (a.w * a.h + b.w * b.h - inter)
}

/// Keep-check formulation: walk boxes by score and keep one unless a kept
/// box of its class overlaps it above the threshold.
pub fn nms_reference(dets: &[ScoredBox], thresh: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    // stable sort keeps lower indices first among equal scores
    idx.sort_by(|&a, &b| dets[b].score.partial_cmp(&dets[a].score).unwrap());
    let mut kept: Vec<usize> = Vec::new();
    for i in idx {
        let clash = kept.iter().any(|&k| {
            dets[k].class_id == dets[i].class_id
                && iou_oracle(&dets[k].bbox, &dets[i].bbox) > thresh
        });
        if !clash {
            kept.push(i);
        }
    }
    kept
}

/// Minimum total over all injective assignments of the smaller side.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    let cols = cost[0].len();
    if rows > cols {
        let t: Vec<Vec<f64>> = (0..cols)
            .map(|j| (0..rows).map(|i| cost[i][j]).collect())
            .collect();
        return brute_force_transposed(&t, cost);
    }
    let mut best = f64::INFINITY;
    let mut used = vec![false; cols];
    let mut chosen = Vec::with_capacity(rows);
    search(cost, 0, &mut used, &mut chosen, &mut |picked| {
        let s: f64 = picked.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        best = best.min(s);
    });
    best
}

// Sums in original row order so totals compare bit for bit.
fn brute_force_transposed(t: &[Vec<f64>], orig: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    let mut used = vec![false; t[0].len()];
    let mut chosen = Vec::new();
    search(t, 0, &mut used, &mut chosen, &mut |picked| {
        let mut pairs: Vec<(usize, usize)> =
            picked.iter().enumerate().map(|(c, &r)| (r, c)).collect();
        pairs.sort_unstable();
        let s: f64 = pairs.iter().map(|&(r, c)| orig[r][c]).sum();
        best = best.min(s);
    });
    best
}

fn search(
    cost: &[Vec<f64>],
    row: usize,
    used: &mut Vec<bool>,
    chosen: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if row == cost.len() {
        visit(chosen);
        return;
    }
    for j in 0..cost[0].len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        chosen.push(j);
        search(cost, row + 1, used, chosen, visit);
        chosen.pop();
        used[j] = false;
    }
}

/// One image of a metric micro-instance.
#[derive(Debug, Clone)]
pub struct MicroImage {
    pub dets: Vec<ScoredBox>,
    pub gts: Vec<GroundTruthInstance>,
}

/// Per-detection outcome for one image: `Some(true)` true positive,
/// `Some(false)` false positive, `None` absorbed by an ignore instance.
/// Scores are assumed distinct.
pub fn match_oracle(img: &MicroImage, thresh: f64) -> Vec<(f64, Option<bool>)> {
    let mut order: Vec<usize> = (0..img.dets.len()).collect();
    order.sort_by(|&a, &b| img.dets[b].score.partial_cmp(&img.dets[a].score).unwrap());
    let mut taken = vec![false; img.gts.len()];
    let mut out = Vec::new();
    for d in order {
        let det = &img.dets[d];
        let cands: Vec<(usize, f64)> = img
            .gts
            .iter()
            .enumerate()
            .map(|(g, gt)| (g, iou_oracle(&det.bbox, &gt.full)))
            .filter(|&(_, o)| o >= thresh)
            .collect();
        let free = cands
            .iter()
            .filter(|&&(g, _)| !img.gts[g].ignore && !taken[g])
            .fold(None::<(usize, f64)>, |acc, &(g, o)| match acc {
                Some((_, bo)) if bo >= o => acc,
                _ => Some((g, o)),
            });
        let outcome = if let Some((g, _)) = free {
            taken[g] = true;
            Some(true)
        } else if cands.iter().any(|&(g, _)| img.gts[g].ignore) {
            None
        } else {
            Some(false)
        };
        out.push((det.score, outcome));
    }
    out
}

/// `(tp, fp)` counted over every detection scoring at least `s`.
fn counts_at(outcomes: &[(f64, Option<bool>)], s: f64) -> (usize, usize) {
    let tp = outcomes
        .iter()
        .filter(|(sc, o)| *sc >= s && *o == Some(true))
        .count();
    let fp = outcomes
        .iter()
        .filter(|(sc, o)| *sc >= s && *o == Some(false))
        .count();
    (tp, fp)
}

fn pooled(images: &[MicroImage], thresh: f64) -> (Vec<(f64, Option<bool>)>, usize) {
    let outcomes: Vec<_> = images
        .iter()
        .flat_map(|i| match_oracle(i, thresh))
        .collect();
    let n_gt = images
        .iter()
        .flat_map(|i| &i.gts)
        .filter(|g| !g.ignore)
        .count();
    (outcomes, n_gt)
}

fn thresholds(outcomes: &[(f64, Option<bool>)]) -> Vec<f64> {
    let mut s: Vec<f64> = outcomes
        .iter()
        .filter(|(_, o)| o.is_some())
        .map(|(s, _)| *s)
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s.dedup();
    s
}

/// 101-point interpolated AP: mean over recall levels r of the best precision
/// among score thresholds reaching recall r.
pub fn ap_oracle(images: &[MicroImage], thresh: f64) -> f64 {
    let (outcomes, n_gt) = pooled(images, thresh);
    let pts: Vec<(f64, f64)> = thresholds(&outcomes)
        .into_iter()
        .map(|s| {
            let (tp, fp) = counts_at(&outcomes, s);
            (tp as f64 / n_gt as f64, tp as f64 / (tp + fp) as f64)
        })
        .collect();
    let mut total = 0.0;
    for k in 0..=100 {
        let r = k as f64 / 100.0;
        let best = pts
            .iter()
            .filter(|p| p.0 >= r)
            .map(|p| p.1)
            .fold(0.0, f64::max);
        total += best;
    }
    total / 101.0
}

/// Log-average miss rate: at each reference FPPI the lowest miss rate among
/// operating points (including "no detections") within that FPPI budget.
pub fn mr2_oracle(images: &[MicroImage], thresh: f64) -> f64 {
    let (outcomes, n_gt) = pooled(images, thresh);
    let n_img = images.len() as f64;
    let mut pts = vec![(0.0, 1.0)];
    for s in thresholds(&outcomes) {
        let (tp, fp) = counts_at(&outcomes, s);
        pts.push((fp as f64 / n_img, 1.0 - tp as f64 / n_gt as f64));
    }
    let mut prod = 1.0;
    for k in 0..9 {
        let r = 10f64.powf(-2.0 + 0.25 * k as f64);
        let mr = pts
            .iter()
            .filter(|p| p.0 <= r)
            .map(|p| p.1)
            .fold(1.0, f64::min);
        prod *= mr.max(1e-4);
    }
    prod.powf(1.0 / 9.0)
}

/// Random micro-instance: up to 5 images, 6 GT and 8 detections each, every
/// score distinct. Detections are jittered copies of GT or random boxes.
pub fn micro_instance(r: &mut SimRng, with_ignore: bool) -> Vec<MicroImage> {
    let n_img = r.random_range(1..=5);
    let mut next_score = 0usize;
    let mut scores: Vec<f64> = (0..40)
        .map(|i| (i as f64 + r.random::<f64>()) / 40.0)
        .collect();
    // shuffle so score order is unrelated to generation order
    for i in (1..scores.len()).rev() {
        let j = r.random_range(0..=i);
        scores.swap(i, j);
    }
    let mut images = Vec::new();
    for _ in 0..n_img {
        let n_gt = r.random_range(0..=6);
        let gts: Vec<GroundTruthInstance> = (0..n_gt)
            .map(|_| {
                let g = GroundTruthInstance::new(random_box(r, 60.0, 40.0));
                if with_ignore && r.random::<f64>() < 0.2 {
                    g.ignored()
                } else {
                    g
                }
            })
            .collect();
        let n_det = r.random_range(0..=8);
        let dets = (0..n_det)
            .map(|_| {
                let b = if !gts.is_empty() && r.random::<f64>() < 0.7 {
                    let g = gts[r.random_range(0..gts.len())].full;
                    let s = 0.25 * g.w.min(g.h);
                    BBox::new(
                        g.x + r.random_range(-s..=s),
                        g.y + r.random_range(-s..=s),
                        g.w * r.random_range(0.8..=1.2),
                        g.h * r.random_range(0.8..=1.2),
                    )
                } else {
                    random_box(r, 60.0, 40.0)
                };
                let s = scores[next_score];
                next_score += 1;
                ScoredBox::new(b, s, 0)
            })
            .collect();
        images.push(MicroImage { dets, gts });
    }
    images
}

pub fn has_gt(images: &[MicroImage]) -> bool {
    images.iter().flat_map(|i| &i.gts).any(|g| !g.ignore)
}

pub fn curve_is_sane(curve: &[FppiCurvePoint]) -> bool {
    curve
        .windows(2)
        .all(|w| w[0].fppi <= w[1].fppi && w[0].miss_rate >= w[1].miss_rate)
}
