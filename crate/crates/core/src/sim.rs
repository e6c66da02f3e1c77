//! Deterministic synthetic crowd scenes with paired visible/full ground truth.
//!
//! Randomness comes from ChaCha8 seeded through `SeedableRng::seed_from_u64`,
//! whose output stream is fixed across platforms and releases.
//!
//! Full boxes are placed one at a time. Every box after the first is put next
//! to a randomly chosen earlier one so that their IoU lands within
//! `tolerance` of `crowd_level`, without exceeding `crowd_level + tolerance`
//! against any other box. Depth follows the bottom edge: the lower the feet,
//! the closer to the camera. An instance's visible box is the largest
//! rectangle of its full box left uncovered by the full boxes of all closer
//! instances, so visible boxes of different instances never overlap.
//! Placements that would leave any instance less than `min_visible_frac`
//! visible are rejected. A layout that gets stuck is abandoned and started
//! over, up to `MAX_LAYOUT_RESTARTS` times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::nms::{greedy_nms, vfg_nms, PairedDetection};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
/// Fresh layouts tried, continuing the same random stream, before giving up.
pub const MAX_LAYOUT_RESTARTS: usize = 20;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Head box geometry relative to the full box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub w_frac: f64,
    pub h_frac: f64,
    /// Vertical position of the head centre inside the full box.
    pub center_y_frac: f64,
}

impl Default for HeadParams {
    fn default() -> Self {
        Self {
            w_frac: 0.3,
            h_frac: 0.12,
            center_y_frac: 0.1,
        }
    }
}

impl HeadParams {
    pub fn head_of(&self, full: &BBox) -> BBox {
        let (cx, _) = full.center();
        BBox::from_center(
            cx,
            full.y + self.center_y_frac * full.h,
            self.w_frac * full.w,
            self.h_frac * full.h,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub seed: u64,
    pub n_instances: usize,
    pub width: f64,
    pub height: f64,
    /// Target IoU between each placed box and the neighbour it is placed against.
    pub crowd_level: f64,
    /// Accepted deviation from `crowd_level`.
    pub tolerance: f64,
    /// Full-box height over width.
    pub aspect_range: (f64, f64),
    /// Full-box height in pixels.
    pub height_range: (f64, f64),
    /// Smallest visible share of a full box that placement will accept.
    pub min_visible_frac: f64,
    pub head: HeadParams,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_instances: 8,
            width: 1280.0,
            height: 720.0,
            crowd_level: 0.5,
            tolerance: 0.05,
            aspect_range: (2.2, 3.0),
            height_range: (80.0, 300.0),
            min_visible_frac: 0.1,
            head: HeadParams::default(),
        }
    }
}

impl SceneConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_instances == 0 {
            return bad("n_instances must be at least 1");
        }
        if !(0.0..1.0).contains(&self.crowd_level) {
            return bad("crowd_level must be in [0, 1)");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(0.0..1.0).contains(&self.min_visible_frac) {
            return bad("min_visible_frac must be in [0, 1)");
        }
        let (a0, a1) = self.aspect_range;
        let (h0, h1) = self.height_range;
        if !(a0 > 0.0 && a0 <= a1) || !(h0 > 0.0 && h0 <= h1) {
            return bad("aspect and height ranges must be positive and ordered");
        }
        if h1 > self.height || h1 / a0 > self.width {
            return bad("largest instance does not fit in the image");
        }
        let hd = &self.head;
        if !(hd.w_frac > 0.0 && hd.w_frac <= 1.0 && hd.h_frac > 0.0)
            || hd.center_y_frac - hd.h_frac / 2.0 < 0.0
            || hd.center_y_frac + hd.h_frac / 2.0 > 1.0
        {
            return bad("head box must lie inside the full box");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimInstance {
    pub full: BBox,
    pub visible: BBox,
    pub head: BBox,
    /// 0 is closest to the camera.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub config: SceneConfig,
    pub instances: Vec<SimInstance>,
    /// Noise-free detections, one per instance, score 1.
    pub detections: Vec<PairedDetection>,
}

impl SyntheticScene {
    pub fn full_boxes(&self) -> Vec<BBox> {
        self.instances.iter().map(|i| i.full).collect()
    }

    pub fn visible_boxes(&self) -> Vec<BBox> {
        self.instances.iter().map(|i| i.visible).collect()
    }

    pub fn head_boxes(&self) -> Vec<BBox> {
        self.instances.iter().map(|i| i.head).collect()
    }
}

/// Largest axis-aligned rectangle inside `full` that avoids every occluder.
///
/// The best rectangle has its left and right sides on edges of `full` or of
/// an occluder, so each such pair of edges is tried with the tallest free
/// vertical gap between them. The first rectangle of maximal area wins. A
/// fully covered box collapses to a zero-size box at its centre.
pub fn visible_region(full: &BBox, occluders: &[BBox]) -> BBox {
    let covers: Vec<BBox> = occluders.iter().filter_map(|o| full.intersect(o)).collect();
    if covers.is_empty() {
        return *full;
    }
    let (x1, y1, x2, y2) = full.corners();
    let mut xs = vec![x1, x2];
    for c in &covers {
        xs.push(c.x);
        xs.push(c.right());
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut best: Option<BBox> = None;
    for (a, &xa) in xs.iter().enumerate() {
        for &xb in &xs[a + 1..] {
            let mut blocked: Vec<(f64, f64)> = covers
                .iter()
                .filter(|c| c.x < xb && c.right() > xa)
                .map(|c| (c.y, c.bottom()))
                .collect();
            blocked.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut top = y1;
            let mut gaps = Vec::new();
            for (b0, b1) in blocked {
                if b0 > top {
                    gaps.push((top, b0));
                }
                top = top.max(b1);
            }
            if y2 > top {
                gaps.push((top, y2));
            }
            for (g0, g1) in gaps {
                let cand = BBox::from_corners(xa, g0, xb, g1);
                if cand.area() > best.map_or(0.0, |b| b.area()) {
                    best = Some(cand);
                }
            }
        }
    }
    best.unwrap_or_else(|| {
        let (cx, cy) = full.center();
        BBox::new(cx, cy, 0.0, 0.0)
    })
}

/// Depth ranks: larger bottom edge is closer; ties go to the lower index.
pub fn depth_ranks(fulls: &[BBox]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fulls.len()).collect();
    order.sort_by(|&a, &b| {
        fulls[b]
            .bottom()
            .total_cmp(&fulls[a].bottom())
            .then(a.cmp(&b))
    });
    let mut rank = vec![0; fulls.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Completes full boxes into instances with depth, visible and head boxes.
pub fn derive_instances(fulls: &[BBox], head: &HeadParams) -> Vec<SimInstance> {
    let depth = depth_ranks(fulls);
    fulls
        .iter()
        .enumerate()
        .map(|(i, full)| {
            let closer: Vec<BBox> = fulls
                .iter()
                .zip(&depth)
                .filter(|(_, d)| **d < depth[i])
                .map(|(b, _)| *b)
                .collect();
            let visible = visible_region(full, &closer);
            SimInstance {
                full: *full,
                visible,
                head: head.head_of(full),
                depth: depth[i],
            }
        })
        .collect()
}

fn sample_size(rng: &mut SimRng, cfg: &SceneConfig, base_h: Option<f64>) -> (f64, f64) {
    let (h0, h1) = cfg.height_range;
    let h = match base_h {
        Some(b) => (b * rng.random_range(0.85..=1.15)).clamp(h0, h1),
        None => rng.random_range(h0..=h1),
    };
    let aspect = rng.random_range(cfg.aspect_range.0..=cfg.aspect_range.1);
    (h / aspect, h)
}

fn place_full_boxes(cfg: &SceneConfig, rng: &mut SimRng) -> Result<Vec<BBox>> {
    let mut boxes: Vec<BBox> = Vec::with_capacity(cfg.n_instances);
    let (w, h) = sample_size(rng, cfg, None);
    boxes.push(BBox::new(
        rng.random_range(0.0..=cfg.width - w),
        rng.random_range(0.0..=cfg.height - h),
        w,
        h,
    ));
    for k in 1..cfg.n_instances {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let anchor = boxes[rng.random_range(0..boxes.len())];
            let (bw, bh) = sample_size(rng, cfg, Some(anchor.h));
            let (acx, acy) = anchor.center();
            let cx = acx + rng.random_range(-1.2..=1.2) * anchor.w;
            let cy = acy + rng.random_range(-0.15..=0.15) * anchor.h;
            let cand = BBox::from_center(cx, cy, bw, bh);
            if cand.x < 0.0
                || cand.y < 0.0
                || cand.right() > cfg.width
                || cand.bottom() > cfg.height
            {
                continue;
            }
            if (iou(&cand, &anchor) - cfg.crowd_level).abs() > cfg.tolerance {
                continue;
            }
            if boxes
                .iter()
                .any(|b| iou(&cand, b) > cfg.crowd_level + cfg.tolerance)
            {
                continue;
            }
            boxes.push(cand);
            let visible_ok = derive_instances(&boxes, &cfg.head).iter().all(|i| {
                i.visible.area() >= cfg.min_visible_frac * i.full.area() && i.visible.area() > 0.0
            });
            boxes.pop();
            if !visible_ok {
                continue;
            }
            placed = Some(cand);
            break;
        }
        match placed {
            Some(b) => boxes.push(b),
            None => {
                return Err(Error::PlacementFailure {
                    instance: k,
                    crowd_level: cfg.crowd_level,
                    attempts: MAX_PLACEMENT_ATTEMPTS,
                })
            }
        }
    }
    Ok(boxes)
}

pub fn generate_scene(cfg: &SceneConfig) -> Result<SyntheticScene> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut fulls = place_full_boxes(cfg, &mut rng);
    for _ in 1..MAX_LAYOUT_RESTARTS {
        if fulls.is_ok() {
            break;
        }
        fulls = place_full_boxes(cfg, &mut rng);
    }
    let fulls = fulls?;
    Ok(scene_from_full_boxes(cfg.clone(), &fulls))
}

/// Builds a scene around hand-placed full boxes.
pub fn scene_from_full_boxes(config: SceneConfig, fulls: &[BBox]) -> SyntheticScene {
    let instances = derive_instances(fulls, &config.head);
    let detections = instances
        .iter()
        .map(|i| PairedDetection {
            visible: i.visible,
            full: i.full,
            score: 1.0,
            class_id: 0,
        })
        .collect();
    SyntheticScene {
        config,
        instances,
        detections,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Centre jitter, as a fraction of box width/height.
    pub center_sigma: f64,
    /// Log-size jitter.
    pub size_sigma: f64,
    /// Jitter magnitude at which the score bottoms out.
    pub score_gate: f64,
    /// Additive score noise.
    pub score_sigma: f64,
    /// Chance, per instance, of an extra false positive.
    pub fp_rate: f64,
    /// Chance that an instance is missed.
    pub fn_rate: f64,
}

impl NoiseModel {
    pub const fn none() -> Self {
        Self {
            center_sigma: 0.0,
            size_sigma: 0.0,
            score_gate: 0.5,
            score_sigma: 0.0,
            fp_rate: 0.0,
            fn_rate: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let sig_ok = [self.center_sigma, self.size_sigma, self.score_sigma]
            .iter()
            .all(|s| *s >= 0.0 && s.is_finite());
        let rates_ok = [self.fp_rate, self.fn_rate]
            .iter()
            .all(|r| (0.0..=1.0).contains(r));
        if !sig_ok || !rates_ok || !(self.score_gate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid noise model {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            center_sigma: 0.05,
            size_sigma: 0.05,
            score_gate: 0.5,
            score_sigma: 0.02,
            fp_rate: 0.1,
            fn_rate: 0.05,
        }
    }
}

fn normal(rng: &mut SimRng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Centre offsets `(dx, dy)` and log-size offsets `(dw, dh)`, all relative.
fn jitter(rng: &mut SimRng, noise: &NoiseModel) -> [f64; 4] {
    [
        noise.center_sigma * normal(rng),
        noise.center_sigma * normal(rng),
        noise.size_sigma * normal(rng),
        noise.size_sigma * normal(rng),
    ]
}

fn apply_jitter(b: &BBox, j: &[f64; 4]) -> BBox {
    if j.iter().all(|v| *v == 0.0) {
        return *b;
    }
    let (cx, cy) = b.center();
    BBox::from_center(
        cx + j[0] * b.w,
        cy + j[1] * b.h,
        b.w * j[2].exp(),
        b.h * j[3].exp(),
    )
}

/// Noisy detections for a scene.
///
/// Each kept instance yields a jittered pair whose score falls with the
/// jitter magnitude `m` as `clamp(1 - m / score_gate, 0.05, 1)`, plus a small
/// additive noise. False positives are random boxes scoring at most 0.5.
pub fn perturb_detections(
    scene: &SyntheticScene,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<PairedDetection>> {
    noise.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(scene.instances.len());
    for inst in &scene.instances {
        let dropped = rng.random::<f64>() < noise.fn_rate;
        let jf = jitter(&mut rng, noise);
        let jv = jitter(&mut rng, noise);
        let eps = normal(&mut rng);
        if dropped {
            continue;
        }
        let magnitude = jf.iter().map(|v| v * v).sum::<f64>().sqrt();
        let base = (1.0 - magnitude / noise.score_gate).clamp(0.05, 1.0);
        let score = (base + noise.score_sigma * eps).clamp(0.05, 1.0);
        out.push(PairedDetection {
            visible: apply_jitter(&inst.visible, &jv),
            full: apply_jitter(&inst.full, &jf),
            score,
            class_id: 0,
        });
    }
    let cfg = &scene.config;
    for _ in 0..scene.instances.len() {
        if rng.random::<f64>() >= noise.fp_rate {
            continue;
        }
        let h = rng.random_range(cfg.height_range.0..=cfg.height_range.1);
        let w = h / rng.random_range(cfg.aspect_range.0..=cfg.aspect_range.1);
        let full = BBox::new(
            rng.random_range(0.0..=(cfg.width - w).max(0.0)),
            rng.random_range(0.0..=(cfg.height - h).max(0.0)),
            w,
            h,
        );
        let visible = BBox::new(full.x, full.y, full.w, full.h * rng.random_range(0.3..=1.0));
        out.push(PairedDetection {
            visible,
            full,
            score: rng.random_range(0.05..=0.5),
            class_id: 0,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PreservationSummary {
    pub scenes: usize,
    pub gt_count: usize,
    pub kept_by_greedy_full: usize,
    pub kept_by_vfg: usize,
}

impl PreservationSummary {
    pub fn merge(self, o: Self) -> Self {
        Self {
            scenes: self.scenes + o.scenes,
            gt_count: self.gt_count + o.gt_count,
            kept_by_greedy_full: self.kept_by_greedy_full + o.kept_by_greedy_full,
            kept_by_vfg: self.kept_by_vfg + o.kept_by_vfg,
        }
    }
}

/// Greedy NMS on the full boxes versus NMS guided by the visible boxes, on
/// the same detections.
pub fn preservation_on_detections(
    dets: &[PairedDetection],
    gt_count: usize,
    thresh: f64,
) -> PreservationSummary {
    let fulls: Vec<_> = dets.iter().map(PairedDetection::full_scored).collect();
    PreservationSummary {
        scenes: 1,
        gt_count,
        kept_by_greedy_full: greedy_nms(&fulls, thresh).len(),
        kept_by_vfg: vfg_nms(dets, thresh).len(),
    }
}

pub fn nms_preservation_experiment(
    cfg: &SceneConfig,
    noise: &NoiseModel,
    thresh: f64,
    det_seed: u64,
) -> Result<PreservationSummary> {
    let scene = generate_scene(cfg)?;
    let dets = perturb_detections(&scene, noise, det_seed)?;
    Ok(preservation_on_detections(
        &dets,
        scene.instances.len(),
        thresh,
    ))
}

/// Seeds used for scene `i` of a batch: the scene seed is `base + i` and its
/// detections use the bit-inverted scene seed.
pub fn batch_seeds(base: u64, i: usize) -> (u64, u64) {
    let s = base.wrapping_add(i as u64);
    (s, !s)
}

/// Runs the experiment over `n_scenes` consecutive seeds and sums the counts.
pub fn preservation_batch(
    cfg: &SceneConfig,
    noise: &NoiseModel,
    thresh: f64,
    n_scenes: usize,
) -> Result<PreservationSummary> {
    (0..n_scenes)
        .into_par_iter()
        .map(|i| {
            let (scene_seed, det_seed) = batch_seeds(cfg.seed, i);
            let c = SceneConfig {
                seed: scene_seed,
                ..cfg.clone()
            };
            nms_preservation_experiment(&c, noise, thresh, det_seed)
        })
        .try_reduce(PreservationSummary::default, |a, b| Ok(a.merge(b)))
}

/// Mean IoU over all unordered pairs; `None` with fewer than two boxes.
pub fn mean_pairwise_iou(boxes: &[BBox]) -> Option<f64> {
    let n = boxes.len();
    if n < 2 {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += iou(&boxes[i], &boxes[j]);
        }
    }
    Some(sum / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::occlusion_ratio;

    #[test]
    fn single_instance_is_fully_visible() {
        let cfg = SceneConfig {
            n_instances: 1,
            ..Default::default()
        };
        let s = generate_scene(&cfg).unwrap();
        assert_eq!(s.instances.len(), 1);
        assert_eq!(s.instances[0].visible, s.instances[0].full);
        let occ = occlusion_ratio(&s.instances[0].visible, &s.instances[0].full).unwrap();
        assert_eq!(occ.occlusion, 0.0);
    }

    #[test]
    fn frontal_instance_hides_right_half() {
        let deep = BBox::new(0.0, 0.0, 10.0, 20.0);
        let front = BBox::new(5.0, 0.0, 10.0, 21.0);
        let inst = derive_instances(&[deep, front], &HeadParams::default());
        assert_eq!(inst[1].depth, 0);
        assert_eq!(inst[0].depth, 1);
        assert_eq!(inst[0].visible, BBox::new(0.0, 0.0, 5.0, 20.0));
        assert_eq!(
            occlusion_ratio(&inst[0].visible, &deep).unwrap().occlusion,
            0.5
        );
        assert_eq!(inst[1].visible, front);
    }

    #[test]
    fn two_occluders_leave_the_middle() {
        let full = BBox::new(0.0, 0.0, 10.0, 20.0);
        let left = BBox::new(-5.0, 0.0, 8.0, 30.0);
        let right = BBox::new(7.0, -2.0, 10.0, 30.0);
        assert_eq!(
            visible_region(&full, &[left, right]),
            BBox::new(3.0, 0.0, 4.0, 20.0)
        );
        // a low occluder under the middle strip leaves a wider band on top
        let low = BBox::new(-5.0, 12.0, 30.0, 20.0);
        assert_eq!(
            visible_region(&full, &[low]),
            BBox::new(0.0, 0.0, 10.0, 12.0)
        );
        assert_eq!(visible_region(&full, &[]), full);
    }

    #[test]
    fn covered_instance_has_empty_visible_box() {
        let v = visible_region(
            &BBox::new(2.0, 2.0, 4.0, 4.0),
            &[BBox::new(0.0, 0.0, 10.0, 10.0)],
        );
        assert_eq!(v.area(), 0.0);
        assert_eq!(v, BBox::new(4.0, 4.0, 0.0, 0.0));
    }

    #[test]
    fn same_seed_same_scene() {
        let cfg = SceneConfig {
            seed: 42,
            ..Default::default()
        };
        let a = generate_scene(&cfg).unwrap();
        let b = generate_scene(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let other = generate_scene(&SceneConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.instances, other.instances);
    }

    #[test]
    fn unreachable_crowd_level_fails() {
        // boxes as large as the image cannot sit next to each other
        let cfg = SceneConfig {
            n_instances: 3,
            width: 100.0,
            height: 300.0,
            aspect_range: (3.0, 3.0),
            height_range: (300.0, 300.0),
            crowd_level: 0.2,
            ..Default::default()
        };
        assert!(matches!(
            generate_scene(&cfg),
            Err(Error::PlacementFailure { instance: 1, .. })
        ));
    }

    #[test]
    fn config_validation() {
        let bad = [
            SceneConfig {
                n_instances: 0,
                ..Default::default()
            },
            SceneConfig {
                crowd_level: 1.0,
                ..Default::default()
            },
            SceneConfig {
                height_range: (10.0, 5000.0),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(
                matches!(generate_scene(&c), Err(Error::InvalidParameter(_))),
                "{c:?}"
            );
        }
    }

    #[test]
    fn zero_noise_reproduces_ground_truth() {
        let s = generate_scene(&SceneConfig::default()).unwrap();
        let d = perturb_detections(&s, &NoiseModel::none(), 7).unwrap();
        assert_eq!(d, s.detections);
        assert!(d.iter().all(|p| p.score == 1.0));
    }

    #[test]
    fn full_miss_rate_drops_everything() {
        let s = generate_scene(&SceneConfig::default()).unwrap();
        let noise = NoiseModel {
            fn_rate: 1.0,
            ..NoiseModel::none()
        };
        assert!(perturb_detections(&s, &noise, 7).unwrap().is_empty());
    }

    #[test]
    fn noisy_detections_are_reproducible() {
        let s = generate_scene(&SceneConfig::default()).unwrap();
        let n = NoiseModel::default();
        assert_eq!(
            perturb_detections(&s, &n, 3).unwrap(),
            perturb_detections(&s, &n, 3).unwrap()
        );
        assert_ne!(
            perturb_detections(&s, &n, 3).unwrap(),
            perturb_detections(&s, &n, 4).unwrap()
        );
    }

    #[test]
    fn two_instance_preservation() {
        let p1 = PairedDetection {
            visible: BBox::new(0.0, 0.0, 10.0, 10.0),
            full: BBox::new(0.0, 0.0, 10.0, 20.0),
            score: 0.9,
            class_id: 0,
        };
        let p2 = PairedDetection {
            visible: BBox::new(2.0, 10.0, 10.0, 10.0),
            full: BBox::new(2.0, 0.0, 10.0, 20.0),
            score: 0.8,
            class_id: 0,
        };
        let s = preservation_on_detections(&[p1, p2], 2, 0.5);
        assert_eq!((s.kept_by_greedy_full, s.kept_by_vfg), (1, 2));

        let s = preservation_on_detections(&[p1], 1, 0.5);
        assert_eq!((s.kept_by_greedy_full, s.kept_by_vfg), (1, 1));

        let far = PairedDetection {
            visible: p2.visible.translate(100.0, 0.0),
            full: p2.full.translate(100.0, 0.0),
            ..p2
        };
        let s = preservation_on_detections(&[p1, far], 2, 0.5);
        assert_eq!((s.kept_by_greedy_full, s.kept_by_vfg), (2, 2));
    }

    #[test]
    fn mean_pairwise_iou_small_cases() {
        assert_eq!(mean_pairwise_iou(&[BBox::new(0.0, 0.0, 1.0, 1.0)]), None);
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(5.0, 0.0, 10.0, 10.0);
        let m = mean_pairwise_iou(&[a, b]).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-15);
    }
}
