//! Paired visible/full regression targets and the single-RoI multi-task loss.
//!
//! Both halves of the eight-dimensional target are expressed relative to the
//! same visible proposal: centre offsets are normalised by the proposal's
//! width and height, sizes are log-ratios against them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Default weight of the localisation term.
pub const DEFAULT_LAMBDA_LOC: f64 = 3.0;

/// Focal loss parameters used when none are given.
pub const FOCAL_ALPHA: f64 = 0.25;
pub const FOCAL_GAMMA: f64 = 2.0;

/// Visible-box proposal in centre form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub cx: f64,
    pub cy: f64,
    pub pw: f64,
    pub ph: f64,
}

impl Proposal {
    pub const fn new(cx: f64, cy: f64, pw: f64, ph: f64) -> Self {
        Self { cx, cy, pw, ph }
    }

    pub fn from_bbox(b: &BBox) -> Self {
        let (cx, cy) = b.center();
        Self::new(cx, cy, b.w, b.h)
    }

    pub fn to_bbox(&self) -> BBox {
        BBox::from_center(self.cx, self.cy, self.pw, self.ph)
    }
}

/// A box in centre form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl CenterBox {
    pub const fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { cx, cy, w, h }
    }

    pub fn from_bbox(b: &BBox) -> Self {
        let (cx, cy) = b.center();
        Self::new(cx, cy, b.w, b.h)
    }

    pub fn to_bbox(&self) -> BBox {
        BBox::from_center(self.cx, self.cy, self.w, self.h)
    }
}

/// Ground-truth visible and full box of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedGroundTruth {
    pub visible: CenterBox,
    pub full: CenterBox,
}

/// The eight deltas `(dx_v, dy_v, dw_v, dh_v, dx_f, dy_f, dw_f, dh_f)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegressionTarget(pub [f64; 8]);

impl RegressionTarget {
    pub fn visible(&self) -> [f64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn full(&self) -> [f64; 4] {
        [self.0[4], self.0[5], self.0[6], self.0[7]]
    }

    pub fn from_halves(visible: [f64; 4], full: [f64; 4]) -> Self {
        let mut t = [0.0; 8];
        t[..4].copy_from_slice(&visible);
        t[4..].copy_from_slice(&full);
        Self(t)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

fn encode_one(p: &Proposal, g: &CenterBox) -> [f64; 4] {
    [
        (g.cx - p.cx) / p.pw,
        (g.cy - p.cy) / p.ph,
        (g.w / p.pw).ln(),
        (g.h / p.ph).ln(),
    ]
}

fn decode_one(p: &Proposal, d: &[f64; 4]) -> CenterBox {
    CenterBox {
        cx: p.cx + d[0] * p.pw,
        cy: p.cy + d[1] * p.ph,
        w: p.pw * d[2].exp(),
        h: p.ph * d[3].exp(),
    }
}

pub fn encode_targets(p: &Proposal, gt: &PairedGroundTruth) -> Result<RegressionTarget> {
    if !(p.pw > 0.0 && p.ph > 0.0) {
        return Err(Error::NonPositiveSize("proposal"));
    }
    if !(gt.visible.w > 0.0 && gt.visible.h > 0.0) {
        return Err(Error::NonPositiveSize("visible ground truth"));
    }
    if !(gt.full.w > 0.0 && gt.full.h > 0.0) {
        return Err(Error::NonPositiveSize("full ground truth"));
    }
    Ok(RegressionTarget::from_halves(
        encode_one(p, &gt.visible),
        encode_one(p, &gt.full),
    ))
}

/// Inverse of [`encode_targets`].
pub fn decode_targets(p: &Proposal, t: &RegressionTarget) -> PairedGroundTruth {
    PairedGroundTruth {
        visible: decode_one(p, &t.visible()),
        full: decode_one(p, &t.full()),
    }
}

pub fn smooth_l1(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * x * x
    } else {
        a - 0.5
    }
}

pub fn smooth_l1_grad(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x
    } else {
        x.signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClsMode {
    /// Softmax over the class logits, negative log-likelihood of the label.
    SoftmaxCe,
    /// Per-class sigmoid focal loss against the one-hot label.
    Focal { alpha: f64, gamma: f64 },
}

impl ClsMode {
    pub const fn focal() -> Self {
        ClsMode::Focal {
            alpha: FOCAL_ALPHA,
            gamma: FOCAL_GAMMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossInputs {
    /// Raw class logits.
    pub scores: Vec<f64>,
    pub label: usize,
    pub predicted: RegressionTarget,
    pub target: RegressionTarget,
    pub lambda_loc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub cls: f64,
    pub loc: f64,
    pub total: f64,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln(sigmoid(x))` without overflow on either tail.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn classification_loss(scores: &[f64], label: usize, mode: ClsMode) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidLossInput("empty class scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidLossInput("non-finite class score"));
    }
    if label >= scores.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: scores.len(),
        });
    }
    let loss = match mode {
        ClsMode::SoftmaxCe => log_sum_exp(scores) - scores[label],
        ClsMode::Focal { alpha, gamma } => scores
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                // p_t and ln(p_t) for the positive / negative case
                let (p_t, ln_p_t, alpha_t) = if k == label {
                    (sigmoid(s), log_sigmoid(s), alpha)
                } else {
                    (sigmoid(-s), log_sigmoid(-s), 1.0 - alpha)
                };
                -alpha_t * (1.0 - p_t).powf(gamma) * ln_p_t
            })
            .sum(),
    };
    // rounding in log-sum-exp can leave a tiny negative residue
    Ok(loss.max(0.0))
}

pub fn localization_loss(predicted: &RegressionTarget, target: &RegressionTarget) -> f64 {
    predicted
        .0
        .iter()
        .zip(target.0.iter())
        .map(|(t, g)| smooth_l1(t - g))
        .sum()
}

pub fn multi_task_loss_breakdown(inp: &LossInputs, mode: ClsMode) -> Result<LossBreakdown> {
    if !(inp.lambda_loc > 0.0) || !inp.lambda_loc.is_finite() {
        return Err(Error::InvalidLossInput("lambda_loc must be positive"));
    }
    if !inp.predicted.is_finite() || !inp.target.is_finite() {
        return Err(Error::InvalidLossInput("non-finite regression target"));
    }
    let cls = classification_loss(&inp.scores, inp.label, mode)?;
    let loc = inp.lambda_loc * localization_loss(&inp.predicted, &inp.target);
    Ok(LossBreakdown {
        cls,
        loc,
        total: cls + loc,
    })
}

/// Classification loss plus `lambda_loc` times the smooth-L1 residual summed
/// over all eight target dimensions.
pub fn multi_task_loss(inp: &LossInputs, mode: ClsMode) -> Result<f64> {
    multi_task_loss_breakdown(inp, mode).map(|b| b.total)
}
