//! Body/part association as a rectangular linear assignment problem.
//!
//! Each body must take exactly one part and each part goes to at most one
//! body. Gated-out pairs are encoded with a large finite sentinel cost so the
//! solver always sees a complete matrix; pairs that land on the sentinel are
//! reported as infeasible and dropped by [`associate`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

pub const INFEASIBLE_COST: f64 = 1e6;

/// Default vertical position of the head anchor, as a fraction of body height.
pub const DEFAULT_ANCHOR_Y_FRAC: f64 = 0.1;
/// Default distance gate, as a fraction of body height.
pub const DEFAULT_GATE_BODY_FRAC: f64 = 0.5;
pub const DEFAULT_MIN_IOU: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    infeasible_cost: f64,
}

impl CostMatrix {
    /// Row-major `rows x cols` matrix.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::MatrixShape {
                rows,
                cols,
                got: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCost {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self {
            rows,
            cols,
            data,
            infeasible_cost: INFEASIBLE_COST,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            if r.len() != m {
                return Err(Error::MatrixShape {
                    rows: n,
                    cols: m,
                    got: r.len() * n,
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(n, m, data)
    }

    pub fn with_infeasible_cost(mut self, c: f64) -> Self {
        self.infeasible_cost = c;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn infeasible_cost(&self) -> f64 {
        self.infeasible_cost
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn is_feasible(&self, row: usize, col: usize) -> bool {
        self.get(row, col) < self.infeasible_cost
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
            infeasible_cost: self.infeasible_cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignedPair {
    pub row: usize,
    pub col: usize,
    pub cost: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Sorted by row.
    pub pairs: Vec<AssignedPair>,
    /// Sum of the chosen entries in row order, infeasible ones included.
    pub total_cost: f64,
}

impl Assignment {
    pub fn feasible_pairs(&self) -> impl Iterator<Item = &AssignedPair> {
        self.pairs.iter().filter(|p| p.feasible)
    }
}

/// Shortest augmenting path with potentials; `a` is `n x m` with `n <= m`.
/// Returns the column assigned to each row.
fn solve_wide(m: &CostMatrix) -> Vec<usize> {
    let (n, w) = (m.rows, m.cols);
    debug_assert!(n <= w);
    // 1-based; row/column 0 is the virtual root
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; w + 1];
    let mut owner = vec![0usize; w + 1];
    let mut way = vec![0usize; w + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; w + 1];
        let mut used = vec![false; w + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=w {
                if used[j] {
                    continue;
                }
                let cur = m.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=w {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        // augment along the alternating path back to the root
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![usize::MAX; n];
    for j in 1..=w {
        if owner[j] != 0 {
            col_of[owner[j] - 1] = j - 1;
        }
    }
    col_of
}

/// Minimum-cost assignment.
///
/// With `rows <= cols` every row is assigned once. Taller matrices are solved
/// transposed, so every column is assigned once instead.
pub fn hungarian_solve(m: &CostMatrix) -> Assignment {
    if m.rows == 0 || m.cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            total_cost: 0.0,
        };
    }
    let mut rc: Vec<(usize, usize)> = if m.rows <= m.cols {
        solve_wide(m).into_iter().enumerate().collect()
    } else {
        solve_wide(&m.transpose())
            .into_iter()
            .enumerate()
            .map(|(c, r)| (r, c))
            .collect()
    };
    rc.sort_unstable();
    let pairs: Vec<AssignedPair> = rc
        .into_iter()
        .map(|(row, col)| AssignedPair {
            row,
            col,
            cost: m.get(row, col),
            feasible: m.is_feasible(row, col),
        })
        .collect();
    let total_cost = pairs.iter().map(|p| p.cost).sum();
    Assignment { pairs, total_cost }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Pixels(f64),
    /// Multiple of the body's height.
    BodyHeight(f64),
}

impl Gate {
    fn radius(&self, body: &BBox) -> f64 {
        match *self {
            Gate::Pixels(px) => px,
            Gate::BodyHeight(f) => f * body.h,
        }
    }

    fn is_positive(&self) -> bool {
        match *self {
            Gate::Pixels(v) | Gate::BodyHeight(v) => v > 0.0 && v.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceParams {
    /// Anchor height inside the body box, as a fraction of its height.
    pub anchor_y_frac: f64,
    pub gate: Gate,
}

impl Default for DistanceParams {
    fn default() -> Self {
        Self {
            anchor_y_frac: DEFAULT_ANCHOR_Y_FRAC,
            gate: Gate::BodyHeight(DEFAULT_GATE_BODY_FRAC),
        }
    }
}

/// Expected part position for a body: horizontally centred, `anchor_y_frac`
/// of the way down.
pub fn part_anchor(body: &BBox, anchor_y_frac: f64) -> (f64, f64) {
    (body.x + body.w / 2.0, body.y + anchor_y_frac * body.h)
}

/// Euclidean distance from each body's part anchor to each part centre.
/// Parts farther than the gate, or centred outside the body, are infeasible.
pub fn build_cost_distance(
    bodies: &[BBox],
    parts: &[BBox],
    params: &DistanceParams,
) -> Result<CostMatrix> {
    if bodies.is_empty() {
        return Err(Error::EmptyInput("bodies"));
    }
    if parts.is_empty() {
        return Err(Error::EmptyInput("parts"));
    }
    if !params.gate.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "gate must be positive, got {:?}",
            params.gate
        )));
    }
    let mut data = Vec::with_capacity(bodies.len() * parts.len());
    for body in bodies {
        let (ax, ay) = part_anchor(body, params.anchor_y_frac);
        let gate = params.gate.radius(body);
        for part in parts {
            let (px, py) = part.center();
            let d = (px - ax).hypot(py - ay);
            let ok = d <= gate && body.contains_point(px, py);
            data.push(if ok { d } else { INFEASIBLE_COST });
        }
    }
    CostMatrix::new(bodies.len(), parts.len(), data)
}

/// `1 - IoU`, with pairs below `min_iou` gated out.
pub fn build_cost_iou(boxes_a: &[BBox], boxes_b: &[BBox], min_iou: f64) -> Result<CostMatrix> {
    build_cost_iou_gated(boxes_a, boxes_b, min_iou, false)
}

/// Like [`build_cost_iou`]; with `require_containment` a pair is also gated
/// out unless the `b` box lies inside the `a` box, as a visible box does
/// inside its own full box.
pub fn build_cost_iou_gated(
    boxes_a: &[BBox],
    boxes_b: &[BBox],
    min_iou: f64,
    require_containment: bool,
) -> Result<CostMatrix> {
    if boxes_a.is_empty() || boxes_b.is_empty() {
        return Err(Error::EmptyInput("boxes"));
    }
    if !(0.0..1.0).contains(&min_iou) {
        return Err(Error::InvalidParameter(format!(
            "min_iou must be in [0, 1), got {min_iou}"
        )));
    }
    let mut data = Vec::with_capacity(boxes_a.len() * boxes_b.len());
    for a in boxes_a {
        for b in boxes_b {
            let o = iou(a, b);
            let ok = o >= min_iou && (!require_containment || a.contains(b));
            data.push(if ok { 1.0 - o } else { INFEASIBLE_COST });
        }
    }
    CostMatrix::new(boxes_a.len(), boxes_b.len(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AssociationMetric {
    Distance(DistanceParams),
    Iou {
        min_iou: f64,
        require_containment: bool,
    },
}

impl AssociationMetric {
    /// IoU cost for pairing visible boxes (parts) with full boxes (bodies).
    pub fn visible_full() -> Self {
        AssociationMetric::Iou {
            min_iou: DEFAULT_MIN_IOU,
            require_containment: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub body_index: usize,
    pub part_index: usize,
    pub body: BBox,
    pub part: BBox,
    pub cost: f64,
}

/// Every input index appears exactly once across the three lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AssociationResult {
    pub matched: Vec<MatchedPair>,
    pub unmatched_bodies: Vec<usize>,
    pub unmatched_parts: Vec<usize>,
}

impl AssociationResult {
    pub fn box_pairs(&self) -> Vec<(BBox, BBox)> {
        self.matched.iter().map(|m| (m.body, m.part)).collect()
    }
}

pub fn associate(
    bodies: &[BBox],
    parts: &[BBox],
    metric: &AssociationMetric,
) -> Result<AssociationResult> {
    if bodies.is_empty() || parts.is_empty() {
        return Ok(AssociationResult {
            matched: Vec::new(),
            unmatched_bodies: (0..bodies.len()).collect(),
            unmatched_parts: (0..parts.len()).collect(),
        });
    }
    let cost = match metric {
        AssociationMetric::Distance(p) => build_cost_distance(bodies, parts, p)?,
        AssociationMetric::Iou {
            min_iou,
            require_containment,
        } => build_cost_iou_gated(bodies, parts, *min_iou, *require_containment)?,
    };
    let assignment = hungarian_solve(&cost);
    let mut body_used = vec![false; bodies.len()];
    let mut part_used = vec![false; parts.len()];
    let mut matched = Vec::new();
    for p in assignment.feasible_pairs() {
        body_used[p.row] = true;
        part_used[p.col] = true;
        matched.push(MatchedPair {
            body_index: p.row,
            part_index: p.col,
            body: bodies[p.row],
            part: parts[p.col],
            cost: p.cost,
        });
    }
    let unused = |used: &[bool]| {
        used.iter()
            .enumerate()
            .filter(|(_, &u)| !u)
            .map(|(i, _)| i)
            .collect()
    };
    Ok(AssociationResult {
        matched,
        unmatched_bodies: unused(&body_used),
        unmatched_parts: unused(&part_used),
    })
}

/// Match counts behind an association recall/precision figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssociationCounts {
    pub matched: usize,
    pub gt: usize,
    pub predicted: usize,
}

impl AssociationCounts {
    /// 1 when there is no ground truth.
    pub fn recall(&self) -> f64 {
        if self.gt == 0 {
            1.0
        } else {
            self.matched as f64 / self.gt as f64
        }
    }

    /// 0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        if self.predicted == 0 {
            0.0
        } else {
            self.matched as f64 / self.predicted as f64
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            matched: self.matched + other.matched,
            gt: self.gt + other.gt,
            predicted: self.predicted + other.predicted,
        }
    }
}

/// Counts predicted `(body, part)` pairs that reproduce a ground-truth pair.
///
/// A prediction can only match a ground-truth pair when the body IoU reaches
/// `thresh_body` and the part IoU reaches `thresh_part`. Predictions and
/// ground truth are paired one-to-one by a Hungarian pass over the summed
/// `1 - IoU` of both boxes, so no ground-truth pair is credited twice.
pub fn count_association_matches(
    gt_pairs: &[(BBox, BBox)],
    pred_pairs: &[(BBox, BBox)],
    thresh_body: f64,
    thresh_part: f64,
) -> AssociationCounts {
    let mut counts = AssociationCounts {
        matched: 0,
        gt: gt_pairs.len(),
        predicted: pred_pairs.len(),
    };
    if gt_pairs.is_empty() || pred_pairs.is_empty() {
        return counts;
    }
    let mut data = Vec::with_capacity(gt_pairs.len() * pred_pairs.len());
    for (gb, gp) in gt_pairs {
        for (pb, pp) in pred_pairs {
            let ob = iou(gb, pb);
            let op = iou(gp, pp);
            data.push(if ob >= thresh_body && op >= thresh_part {
                (1.0 - ob) + (1.0 - op)
            } else {
                INFEASIBLE_COST
            });
        }
    }
    let cost = CostMatrix::new(gt_pairs.len(), pred_pairs.len(), data).expect("finite costs");
    counts.matched = hungarian_solve(&cost).feasible_pairs().count();
    counts
}

/// `(recall, precision)` of predicted pairs against ground-truth pairs.
pub fn eval_association(
    gt_pairs: &[(BBox, BBox)],
    pred_pairs: &[(BBox, BBox)],
    thresh_body: f64,
    thresh_part: f64,
) -> (f64, f64) {
    let c = count_association_matches(gt_pairs, pred_pairs, thresh_body, thresh_part);
    (c.recall(), c.precision())
}
