//! Post-processing and evaluation for detectors that regress a visible box
//! and a full box per pedestrian.
//!
//! - [`geometry`]: boxes, IoU, occlusion.
//! - [`regression`]: paired regression targets and the multi-task loss.
//! - [`nms`]: greedy, linear soft and visible-guided NMS.
//! - [`association`]: Hungarian body/part association and its evaluation.
//! - [`evaluation`]: AP, MR-2, subsets and IoU sweeps.
//! - [`sim`]: synthetic crowd scenes.
//! - [`io`]: ODGT-style annotation and detection files.

pub mod association;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod nms;
pub mod regression;
pub mod sim;

pub use association::{
    associate, build_cost_distance, build_cost_iou, build_cost_iou_gated, eval_association,
    hungarian_solve, Assignment, AssociationMetric, AssociationResult, CostMatrix, DistanceParams,
    Gate,
};
pub use error::{Error, Result};
pub use evaluation::{
    apply_subset, average_precision, evaluate, fppi_curve, log_average_miss_rate, match_detections,
    sweep_iou, EvalOptions, EvalReport, GroundTruthInstance, ImageInput, SubsetFilter,
};
pub use geometry::{area, intersection, iou, occlusion_ratio, BBox, OcclusionStats};
pub use nms::{
    greedy_nms, soft_nms_linear, soft_nms_linear_indexed, vfg_nms, PairedDetection, ScoredBox,
};
pub use regression::{
    decode_targets, encode_targets, multi_task_loss, smooth_l1, ClsMode, Proposal,
};
pub use sim::{generate_scene, perturb_detections, NoiseModel, SceneConfig, SyntheticScene};
