use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rand::seq::SliceRandom;
use serde::Serialize;

use vfg_core::association::{
    associate, count_association_matches, AssociationCounts, AssociationMetric, DistanceParams,
    Gate,
};
use vfg_core::evaluation::{evaluate, sweep_iou, sweep_to_csv, EvalOptions, SubsetFilter};
use vfg_core::geometry::BBox;
use vfg_core::io::{
    class_ids, join_images, load_annotations, load_detections, save_annotations, save_detections,
    scene_annotation, scene_detections, AnnotationRecord, DetectedInstance, DetectionRecord,
};
use vfg_core::nms::{greedy_nms_indices, soft_nms_linear_indexed, vfg_nms_indices};
use vfg_core::sim::{
    batch_seeds, generate_scene, perturb_detections, preservation_on_detections, rng_from_seed,
    NoiseModel, PreservationSummary, SceneConfig,
};

#[derive(Parser)]
#[command(
    name = "vfg",
    version,
    about = "Visible-guided NMS, parts association and crowd detection metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score detections against annotations per subset.
    Eval(EvalArgs),
    /// Suppress duplicate detections.
    Nms(NmsArgs),
    /// Pair bodies with parts and score the pairing.
    Associate(AssociateArgs),
    /// Generate synthetic crowd scenes and run the NMS preservation experiment.
    Simulate(SimulateArgs),
    /// Recompute MR-2 and AP along a grid of IoU thresholds.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    dt: PathBuf,
    /// Matching threshold for recall and MR-2.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    /// Comma-separated subset names.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "reasonable,bare,partial,heavy"
    )]
    subsets: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    min_score: f64,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Include per-image TP/FP/FN counts in the JSON report.
    #[arg(long)]
    image_logs: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum NmsMode {
    Greedy,
    Soft,
    Vfg,
}

#[derive(Args)]
struct NmsArgs {
    #[arg(long)]
    dt: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = NmsMode::Greedy)]
    mode: NmsMode,
    #[arg(long, default_value_t = 0.5)]
    thresh: f64,
    /// Soft-NMS drops boxes whose decayed score falls below this.
    #[arg(long, default_value_t = 0.001)]
    score_floor: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    BodyHead,
    VisibleFull,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    Distance,
    Iou,
}

#[derive(Args)]
struct AssociateArgs {
    #[arg(long)]
    gt: PathBuf,
    /// Detections to associate: heads are entries tagged `head`, bodies are
    /// the rest; for visible-full the fbox/vbox of each entry are split apart.
    #[arg(
        long,
        conflicts_with = "gt_as_pred",
        required_unless_present = "gt_as_pred"
    )]
    dt: Option<PathBuf>,
    /// Associate the annotated boxes themselves after shuffling the parts.
    #[arg(long)]
    gt_as_pred: bool,
    #[arg(long, value_enum, default_value_t = Task::BodyHead)]
    task: Task,
    /// Defaults to distance for body-head and IoU for visible-full.
    #[arg(long, value_enum)]
    metric: Option<MetricKind>,
    /// Distance gate as a fraction of body height.
    #[arg(long, default_value_t = 0.5)]
    gate_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    min_iou: f64,
    #[arg(long, default_value_t = 0.5)]
    thresh_b: f64,
    #[arg(long, default_value_t = 0.5)]
    thresh_p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Matched pairs, one JSON line per image.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recall/precision summary as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    scenes: usize,
    #[arg(long, default_value_t = 8)]
    instances: usize,
    #[arg(long, default_value_t = 0.5)]
    crowd_level: f64,
    /// Detections equal to the ground truth, score 1.
    #[arg(long)]
    no_noise: bool,
    #[arg(long, default_value_t = 0.05)]
    center_sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    size_sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    fp_rate: f64,
    #[arg(long, default_value_t = 0.05)]
    fn_rate: f64,
    /// NMS threshold of the preservation experiment.
    #[arg(long, default_value_t = 0.5)]
    thresh: f64,
    #[arg(long)]
    out_gt: PathBuf,
    #[arg(long)]
    out_dt: PathBuf,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    dt: PathBuf,
    /// Either `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0.5:0.95:0.05")]
    grid: String,
    #[arg(long, default_value = "reasonable")]
    subset: String,
    #[arg(long, default_value_t = 0.05)]
    min_score: f64,
    #[arg(long)]
    out: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn subset_filters(names: &[String]) -> Result<Vec<SubsetFilter>> {
    names
        .iter()
        .map(|n| SubsetFilter::by_name(n.trim()).with_context(|| format!("unknown subset {n:?}")))
        .collect()
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let gt = load_annotations(&a.gt).with_context(|| format!("loading {}", a.gt.display()))?;
    let dt = load_detections(&a.dt).with_context(|| format!("loading {}", a.dt.display()))?;
    let images = join_images(&gt, &dt, a.min_score);
    info!("{} images, {} detection lines", images.len(), dt.len());
    let opts = EvalOptions {
        iou_thresh: a.iou,
        min_score: a.min_score,
        keep_image_logs: a.image_logs,
        ..Default::default()
    };
    let report = evaluate(&images, &subset_filters(&a.subsets)?, &opts)?;
    for s in &report.empty_subsets {
        log::warn!("subset {s} has no ground truth");
    }
    if a.json.is_none() && a.csv.is_none() {
        print!("{}", report.to_csv());
    }
    if let Some(p) = &a.json {
        write_file(p, &report.to_json())?;
    }
    if let Some(p) = &a.csv {
        write_file(p, &report.to_csv())?;
    }
    Ok(())
}

fn run_nms(a: &NmsArgs) -> Result<()> {
    let dt = load_detections(&a.dt).with_context(|| format!("loading {}", a.dt.display()))?;
    let classes = class_ids(&dt);
    let mut out = Vec::with_capacity(dt.len());
    let (mut before, mut after) = (0, 0);
    for rec in &dt {
        let scored = rec.scored_full(&classes);
        let kept: Vec<DetectedInstance> = match a.mode {
            NmsMode::Greedy => {
                let boxes: Vec<BBox> = scored.iter().map(|d| d.bbox).collect();
                let scores: Vec<f64> = scored.iter().map(|d| d.score).collect();
                let cls: Vec<u32> = scored.iter().map(|d| d.class_id).collect();
                greedy_nms_indices(&boxes, &scores, &cls, a.thresh)
                    .into_iter()
                    .map(|i| rec.detections[i].clone())
                    .collect()
            }
            NmsMode::Soft => soft_nms_linear_indexed(&scored, a.thresh, a.score_floor)
                .into_iter()
                .map(|(i, score)| DetectedInstance {
                    score,
                    ..rec.detections[i].clone()
                })
                .collect(),
            NmsMode::Vfg => {
                let Some(pairs) = rec.paired(&classes) else {
                    bail!(
                        "image {}: vfg mode needs a vbox on every detection",
                        rec.image_id
                    );
                };
                vfg_nms_indices(&pairs, a.thresh)
                    .into_iter()
                    .map(|i| rec.detections[i].clone())
                    .collect()
            }
        };
        before += rec.detections.len();
        after += kept.len();
        out.push(DetectionRecord {
            image_id: rec.image_id.clone(),
            detections: kept,
        });
    }
    info!("kept {after} of {before} detections");
    save_detections(&a.out, &out).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

/// Annotated `(body, part)` pairs of one image, skipping ignore instances.
fn gt_pairs(rec: &AnnotationRecord, task: Task) -> Vec<(BBox, BBox)> {
    rec.instances
        .iter()
        .filter(|i| !i.ignore)
        .filter_map(|i| {
            let part = match task {
                Task::BodyHead => i.hbox?,
                Task::VisibleFull => i.vbox?,
            };
            Some((i.fbox, part))
        })
        .collect()
}

fn predicted_lists(rec: &DetectionRecord, task: Task) -> (Vec<BBox>, Vec<BBox>) {
    match task {
        Task::BodyHead => {
            let (heads, bodies): (Vec<_>, Vec<_>) = rec
                .detections
                .iter()
                .partition(|d| d.tag.eq_ignore_ascii_case("head"));
            (
                bodies.iter().map(|d| d.fbox).collect(),
                heads.iter().map(|d| d.fbox).collect(),
            )
        }
        Task::VisibleFull => (
            rec.detections.iter().map(|d| d.fbox).collect(),
            rec.detections.iter().filter_map(|d| d.vbox).collect(),
        ),
    }
}

#[derive(Serialize)]
struct PairOut {
    body: [f64; 4],
    part: [f64; 4],
    cost: f64,
}

#[derive(Serialize)]
struct PairLine<'a> {
    #[serde(rename = "ID")]
    id: &'a str,
    pairs: Vec<PairOut>,
}

#[derive(Serialize)]
struct AssociationSummary {
    task: &'static str,
    recall: f64,
    precision: f64,
    matched: usize,
    gt: usize,
    predicted: usize,
}

fn arr(b: &BBox) -> [f64; 4] {
    [b.x, b.y, b.w, b.h]
}

fn run_associate(a: &AssociateArgs) -> Result<()> {
    let gt = load_annotations(&a.gt).with_context(|| format!("loading {}", a.gt.display()))?;
    let dt = match &a.dt {
        Some(p) => Some(load_detections(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let by_id: BTreeMap<&str, &DetectionRecord> = dt
        .iter()
        .flatten()
        .map(|r| (r.image_id.as_str(), r))
        .collect();
    let metric = match (a.metric, a.task) {
        (Some(MetricKind::Distance), _) | (None, Task::BodyHead) => {
            AssociationMetric::Distance(DistanceParams {
                gate: Gate::BodyHeight(a.gate_frac),
                ..Default::default()
            })
        }
        (Some(MetricKind::Iou), task) | (None, task @ Task::VisibleFull) => {
            AssociationMetric::Iou {
                min_iou: a.min_iou,
                require_containment: task == Task::VisibleFull,
            }
        }
    };
    let mut rng = rng_from_seed(a.seed);
    let mut counts = AssociationCounts::default();
    let mut lines = Vec::with_capacity(gt.len());
    for rec in &gt {
        let truth = gt_pairs(rec, a.task);
        let (bodies, parts) = if a.gt_as_pred {
            let bodies: Vec<BBox> = truth.iter().map(|p| p.0).collect();
            let mut parts: Vec<BBox> = truth.iter().map(|p| p.1).collect();
            parts.shuffle(&mut rng);
            (bodies, parts)
        } else {
            by_id
                .get(rec.image_id.as_str())
                .map(|r| predicted_lists(r, a.task))
                .unwrap_or_default()
        };
        let res = associate(&bodies, &parts, &metric)?;
        counts = counts.merge(count_association_matches(
            &truth,
            &res.box_pairs(),
            a.thresh_b,
            a.thresh_p,
        ));
        let line = PairLine {
            id: &rec.image_id,
            pairs: res
                .matched
                .iter()
                .map(|m| PairOut {
                    body: arr(&m.body),
                    part: arr(&m.part),
                    cost: m.cost,
                })
                .collect(),
        };
        lines.push(serde_json::to_string(&line)?);
    }
    let summary = AssociationSummary {
        task: match a.task {
            Task::BodyHead => "body-head",
            Task::VisibleFull => "visible-full",
        },
        recall: counts.recall(),
        precision: counts.precision(),
        matched: counts.matched,
        gt: counts.gt,
        predicted: counts.predicted,
    };
    println!("recall {} precision {}", summary.recall, summary.precision);
    if let Some(p) = &a.out {
        let mut text = lines.join("\n");
        text.push('\n');
        write_file(p, &text)?;
    }
    if let Some(p) = &a.summary {
        write_file(p, &serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SceneSummary {
    #[serde(rename = "ID")]
    id: String,
    #[serde(flatten)]
    counts: PreservationSummary,
}

#[derive(Serialize)]
struct SimulationSummary {
    seed: u64,
    crowd_level: f64,
    thresh: f64,
    noise: NoiseModel,
    aggregate: PreservationSummary,
    scenes: Vec<SceneSummary>,
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let noise = if a.no_noise {
        NoiseModel::none()
    } else {
        NoiseModel {
            center_sigma: a.center_sigma,
            size_sigma: a.size_sigma,
            fp_rate: a.fp_rate,
            fn_rate: a.fn_rate,
            ..NoiseModel::default()
        }
    };
    let mut gt = Vec::with_capacity(a.scenes);
    let mut dt = Vec::with_capacity(a.scenes);
    let mut scenes = Vec::with_capacity(a.scenes);
    let mut aggregate = PreservationSummary::default();
    for i in 0..a.scenes {
        let (scene_seed, det_seed) = batch_seeds(a.seed, i);
        let cfg = SceneConfig {
            seed: scene_seed,
            n_instances: a.instances,
            crowd_level: a.crowd_level,
            ..Default::default()
        };
        let scene = generate_scene(&cfg).with_context(|| format!("scene {i}"))?;
        let dets = perturb_detections(&scene, &noise, det_seed)?;
        let id = format!("sim_{scene_seed}");
        let counts = preservation_on_detections(&dets, scene.instances.len(), a.thresh);
        aggregate = aggregate.merge(counts);
        gt.push(scene_annotation(&scene, &id));
        dt.push(scene_detections(&id, &dets));
        scenes.push(SceneSummary { id, counts });
    }
    info!(
        "greedy kept {} and vfg kept {} of {} instances",
        aggregate.kept_by_greedy_full, aggregate.kept_by_vfg, aggregate.gt_count
    );
    save_annotations(&a.out_gt, &gt).with_context(|| format!("writing {}", a.out_gt.display()))?;
    save_detections(&a.out_dt, &dt).with_context(|| format!("writing {}", a.out_dt.display()))?;
    if let Some(p) = &a.summary {
        let s = SimulationSummary {
            seed: a.seed,
            crowd_level: a.crowd_level,
            thresh: a.thresh,
            noise,
            aggregate,
            scenes,
        };
        write_file(p, &serde_json::to_string_pretty(&s)?)?;
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let [start, stop, step] = [parts[0], parts[1], parts[2]].map(|p| p.trim().parse::<f64>());
        let (start, stop, step) = (start?, stop?, step?);
        if !(step > 0.0) {
            bail!("grid step must be positive");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // computed from the index so the grid carries no accumulated drift
        return Ok((0..=n)
            .map(|k| ((start + step * k as f64) * 1e9).round() / 1e9)
            .collect());
    }
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad grid value {t:?}"))
        })
        .collect()
}

fn run_sweep(a: &SweepArgs) -> Result<()> {
    let gt = load_annotations(&a.gt).with_context(|| format!("loading {}", a.gt.display()))?;
    let dt = load_detections(&a.dt).with_context(|| format!("loading {}", a.dt.display()))?;
    let grid = parse_grid(&a.grid)?;
    let filter = SubsetFilter::by_name(&a.subset)
        .with_context(|| format!("unknown subset {:?}", a.subset))?;
    let opts = EvalOptions {
        min_score: a.min_score,
        ..Default::default()
    };
    let rows = sweep_iou(&join_images(&gt, &dt, a.min_score), &grid, &filter, &opts)?;
    write_file(&a.out, &sweep_to_csv(&rows))
}

fn main() -> Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Eval(a) => run_eval(a),
        Command::Nms(a) => run_nms(a),
        Command::Associate(a) => run_associate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Sweep(a) => run_sweep(a),
    }
}
