//! Axis-aligned bounding boxes and overlap measures.
//!
//! Boxes are stored as `(x, y, w, h)` with `(x, y)` the top-left corner, the
//! same layout the ODGT annotation files use. Corner form is derived on demand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_corners(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self::new(x1, y1, x2 - x1, y2 - y1)
    }

    /// Builds a box of size `w` x `h` centred on `(cx, cy)`.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    /// `(x1, y1, x2, y2)`.
    #[inline]
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (self.x, self.y, self.x + self.w, self.y + self.h)
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// Finite coordinates and non-negative extent.
    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.w, self.h]
            .iter()
            .all(|v| v.is_finite())
            && self.w >= 0.0
            && self.h >= 0.0
    }

    pub fn area(&self) -> f64 {
        area(self)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Whether `(px, py)` lies inside the box, borders included.
    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        let (x1, y1, x2, y2) = self.corners();
        px >= x1 && px <= x2 && py >= y1 && py <= y2
    }

    /// Whether `other` lies entirely inside `self`, borders included.
    pub fn contains(&self, other: &BBox) -> bool {
        let (ax1, ay1, ax2, ay2) = self.corners();
        let (bx1, by1, bx2, by2) = other.corners();
        bx1 >= ax1 && by1 >= ay1 && bx2 <= ax2 && by2 <= ay2
    }

    /// Overlap region, `None` when the boxes do not share positive area.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let (ax1, ay1, ax2, ay2) = self.corners();
        let (bx1, by1, bx2, by2) = other.corners();
        let x1 = ax1.max(bx1);
        let y1 = ay1.max(by1);
        let x2 = ax2.min(bx2);
        let y2 = ay2.min(by2);
        (x2 > x1 && y2 > y1).then(|| BBox::from_corners(x1, y1, x2, y2))
    }
}

/// Fraction of a full box hidden from view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionStats {
    pub occlusion: f64,
    /// Visible area after clamping to the full area.
    pub visible_area: f64,
    pub full_area: f64,
}

pub fn area(b: &BBox) -> f64 {
    b.w * b.h
}

/// Area computed from the corner form. `iou` uses this so that
/// `iou(a, a) == 1.0` holds bit-exactly.
#[inline]
fn corner_area(b: &BBox) -> f64 {
    let (x1, y1, x2, y2) = b.corners();
    (x2 - x1).max(0.0) * (y2 - y1).max(0.0)
}

pub fn intersection(a: &BBox, b: &BBox) -> f64 {
    let (ax1, ay1, ax2, ay2) = a.corners();
    let (bx1, by1, bx2, by2) = b.corners();
    let iw = (ax2.min(bx2) - ax1.max(bx1)).max(0.0);
    let ih = (ay2.min(by2) - ay1.max(by1)).max(0.0);
    iw * ih
}

/// Intersection over union. Zero whenever the union is empty, so degenerate
/// boxes never match anything.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection(a, b);
    let union = corner_area(a) + corner_area(b) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Occlusion of `full` given its `visible` part: `1 - area(visible) / area(full)`.
///
/// The visible area is clamped to the full area first, since annotated
/// visible boxes sometimes poke slightly outside the full box.
pub fn occlusion_ratio(visible: &BBox, full: &BBox) -> Result<OcclusionStats> {
    let full_area = area(full);
    if !(full_area > 0.0) {
        return Err(Error::ZeroFullArea);
    }
    let visible_area = area(visible).clamp(0.0, full_area);
    Ok(OcclusionStats {
        occlusion: (1.0 - visible_area / full_area).clamp(0.0, 1.0),
        visible_area,
        full_area,
    })
}
