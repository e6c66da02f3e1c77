//! Line-delimited JSON annotation and detection files.
//!
//! Annotations follow the CrowdHuman ODGT layout, one image per line:
//!
//! ```text
//! {"ID": "img0", "gtboxes": [{"tag": "person", "fbox": [x, y, w, h],
//!   "vbox": [x, y, w, h], "hbox": [x, y, w, h], "extra": {"ignore": 0}}]}
//! ```
//!
//! Detections use the same shape with `dtboxes` entries carrying `tag`,
//! `score`, `fbox` and an optional `vbox`. Unknown keys are ignored on read.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{GroundTruthInstance, ImageInput};
use crate::geometry::BBox;
use crate::nms::{PairedDetection, ScoredBox};
use crate::sim::SyntheticScene;

pub const DEFAULT_TAG: &str = "person";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedInstance {
    pub tag: String,
    pub fbox: BBox,
    pub vbox: Option<BBox>,
    pub hbox: Option<BBox>,
    pub ignore: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub instances: Vec<AnnotatedInstance>,
}

impl AnnotationRecord {
    pub fn ground_truth(&self) -> Vec<GroundTruthInstance> {
        self.instances
            .iter()
            .map(|i| GroundTruthInstance {
                full: i.fbox,
                visible: i.vbox,
                head: i.hbox,
                ignore: i.ignore,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedInstance {
    pub tag: String,
    pub score: f64,
    pub fbox: BBox,
    pub vbox: Option<BBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: String,
    pub detections: Vec<DetectedInstance>,
}

#[derive(Deserialize)]
struct RawExtra {
    #[serde(default)]
    ignore: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct RawGtBox {
    tag: Option<String>,
    fbox: Option<Vec<f64>>,
    vbox: Option<Vec<f64>>,
    hbox: Option<Vec<f64>>,
    extra: Option<RawExtra>,
}

#[derive(Deserialize)]
struct RawGtLine {
    #[serde(rename = "ID")]
    id: String,
    #[serde(default)]
    gtboxes: Vec<RawGtBox>,
}

#[derive(Deserialize)]
struct RawDtBox {
    tag: Option<String>,
    score: Option<f64>,
    fbox: Option<Vec<f64>>,
    vbox: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawDtLine {
    #[serde(rename = "ID")]
    id: String,
    #[serde(default)]
    dtboxes: Vec<RawDtBox>,
}

#[derive(Serialize)]
struct OutExtra {
    ignore: u8,
}

#[derive(Serialize)]
struct OutGtBox<'a> {
    tag: &'a str,
    fbox: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    vbox: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hbox: Option<[f64; 4]>,
    extra: OutExtra,
}

#[derive(Serialize)]
struct OutGtLine<'a> {
    #[serde(rename = "ID")]
    id: &'a str,
    gtboxes: Vec<OutGtBox<'a>>,
}

#[derive(Serialize)]
struct OutDtBox<'a> {
    tag: &'a str,
    score: f64,
    fbox: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    vbox: Option<[f64; 4]>,
}

#[derive(Serialize)]
struct OutDtLine<'a> {
    #[serde(rename = "ID")]
    id: &'a str,
    dtboxes: Vec<OutDtBox<'a>>,
}

fn arr(b: &BBox) -> [f64; 4] {
    [b.x, b.y, b.w, b.h]
}

fn parse_box(v: &[f64], field: &str, line: usize) -> Result<BBox> {
    let err = |reason: String| Error::Parse { line, reason };
    if v.len() != 4 {
        return Err(err(format!(
            "{field}: expected 4 elements [x, y, w, h], got {}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(err(format!("{field}: non-finite coordinate")));
    }
    if v[2] < 0.0 || v[3] < 0.0 {
        return Err(err(format!("{field}: negative size {}x{}", v[2], v[3])));
    }
    Ok(BBox::new(v[0], v[1], v[2], v[3]))
}

fn parse_opt_box(v: &Option<Vec<f64>>, field: &str, line: usize) -> Result<Option<BBox>> {
    v.as_deref().map(|v| parse_box(v, field, line)).transpose()
}

fn parse_ignore(extra: &Option<RawExtra>, field: &str, line: usize) -> Result<bool> {
    let Some(v) = extra.as_ref().and_then(|e| e.ignore.as_ref()) else {
        return Ok(false);
    };
    match v {
        serde_json::Value::Bool(b) => Ok(*b),
        serde_json::Value::Number(n) => Ok(n.as_f64().is_some_and(|x| x != 0.0)),
        _ => Err(Error::Parse {
            line,
            reason: format!("{field}.extra.ignore: expected a number or boolean"),
        }),
    }
}

/// Calls `f` for every non-blank line with its 1-based number.
fn for_each_line<R: BufRead>(
    reader: R,
    mut f: impl FnMut(usize, &str) -> Result<()>,
) -> Result<()> {
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        f(i + 1, trimmed)?;
    }
    Ok(())
}

fn check_unique(seen: &mut HashSet<String>, id: &str, line: usize) -> Result<()> {
    if !seen.insert(id.to_string()) {
        return Err(Error::DuplicateImageId {
            id: id.to_string(),
            line,
        });
    }
    Ok(())
}

pub fn parse_annotations<R: BufRead>(reader: R) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for_each_line(reader, |line, text| {
        let raw: RawGtLine = serde_json::from_str(text).map_err(|e| Error::Parse {
            line,
            reason: e.to_string(),
        })?;
        check_unique(&mut seen, &raw.id, line)?;
        let mut instances = Vec::with_capacity(raw.gtboxes.len());
        for (k, b) in raw.gtboxes.iter().enumerate() {
            let field = format!("gtboxes[{k}]");
            let fbox = b.fbox.as_deref().ok_or_else(|| Error::Parse {
                line,
                reason: format!("{field}.fbox: missing"),
            })?;
            instances.push(AnnotatedInstance {
                tag: b.tag.clone().unwrap_or_else(|| DEFAULT_TAG.to_string()),
                fbox: parse_box(fbox, &format!("{field}.fbox"), line)?,
                vbox: parse_opt_box(&b.vbox, &format!("{field}.vbox"), line)?,
                hbox: parse_opt_box(&b.hbox, &format!("{field}.hbox"), line)?,
                ignore: parse_ignore(&b.extra, &field, line)?,
            });
        }
        out.push(AnnotationRecord {
            image_id: raw.id,
            instances,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_detections<R: BufRead>(reader: R) -> Result<Vec<DetectionRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for_each_line(reader, |line, text| {
        let raw: RawDtLine = serde_json::from_str(text).map_err(|e| Error::Parse {
            line,
            reason: e.to_string(),
        })?;
        check_unique(&mut seen, &raw.id, line)?;
        let mut detections = Vec::with_capacity(raw.dtboxes.len());
        for (k, b) in raw.dtboxes.iter().enumerate() {
            let field = format!("dtboxes[{k}]");
            let missing = |what: &str| Error::Parse {
                line,
                reason: format!("{field}.{what}: missing"),
            };
            let score = b.score.ok_or_else(|| missing("score"))?;
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::Parse {
                    line,
                    reason: format!("{field}.score: {score} outside [0, 1]"),
                });
            }
            let fbox = b.fbox.as_deref().ok_or_else(|| missing("fbox"))?;
            detections.push(DetectedInstance {
                tag: b.tag.clone().unwrap_or_else(|| DEFAULT_TAG.to_string()),
                score,
                fbox: parse_box(fbox, &format!("{field}.fbox"), line)?,
                vbox: parse_opt_box(&b.vbox, &format!("{field}.vbox"), line)?,
            });
        }
        out.push(DetectionRecord {
            image_id: raw.id,
            detections,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    parse_annotations(BufReader::new(File::open(path)?))
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    parse_detections(BufReader::new(File::open(path)?))
}

pub fn annotation_line(r: &AnnotationRecord) -> String {
    let line = OutGtLine {
        id: &r.image_id,
        gtboxes: r
            .instances
            .iter()
            .map(|i| OutGtBox {
                tag: &i.tag,
                fbox: arr(&i.fbox),
                vbox: i.vbox.as_ref().map(arr),
                hbox: i.hbox.as_ref().map(arr),
                extra: OutExtra {
                    ignore: i.ignore as u8,
                },
            })
            .collect(),
    };
    serde_json::to_string(&line).expect("annotation serializes")
}

pub fn detection_line(r: &DetectionRecord) -> String {
    let line = OutDtLine {
        id: &r.image_id,
        dtboxes: r
            .detections
            .iter()
            .map(|d| OutDtBox {
                tag: &d.tag,
                score: d.score,
                fbox: arr(&d.fbox),
                vbox: d.vbox.as_ref().map(arr),
            })
            .collect(),
    };
    serde_json::to_string(&line).expect("detections serialize")
}

pub fn write_annotations<W: Write>(mut w: W, records: &[AnnotationRecord]) -> Result<()> {
    for r in records {
        writeln!(w, "{}", annotation_line(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_detections<W: Write>(mut w: W, records: &[DetectionRecord]) -> Result<()> {
    for r in records {
        writeln!(w, "{}", detection_line(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_annotations(path: impl AsRef<Path>, records: &[AnnotationRecord]) -> Result<()> {
    write_annotations(BufWriter::new(File::create(path)?), records)
}

pub fn save_detections(path: impl AsRef<Path>, records: &[DetectionRecord]) -> Result<()> {
    write_detections(BufWriter::new(File::create(path)?), records)
}

/// Class ids for the tags present in `records`, numbered in sorted tag order.
pub fn class_ids(records: &[DetectionRecord]) -> BTreeMap<String, u32> {
    let mut tags: Vec<&str> = records
        .iter()
        .flat_map(|r| r.detections.iter().map(|d| d.tag.as_str()))
        .collect();
    tags.sort_unstable();
    tags.dedup();
    tags.into_iter()
        .enumerate()
        .map(|(i, t)| (t.to_string(), i as u32))
        .collect()
}

impl DetectionRecord {
    pub fn scored_full(&self, classes: &BTreeMap<String, u32>) -> Vec<ScoredBox> {
        self.detections
            .iter()
            .map(|d| ScoredBox::new(d.fbox, d.score, classes.get(&d.tag).copied().unwrap_or(0)))
            .collect()
    }

    /// Paired detections; `None` if any entry lacks a visible box.
    pub fn paired(&self, classes: &BTreeMap<String, u32>) -> Option<Vec<PairedDetection>> {
        self.detections
            .iter()
            .map(|d| {
                Some(PairedDetection {
                    visible: d.vbox?,
                    full: d.fbox,
                    score: d.score,
                    class_id: classes.get(&d.tag).copied().unwrap_or(0),
                })
            })
            .collect()
    }

    pub fn from_paired(
        image_id: &str,
        dets: &[PairedDetection],
        tags: &BTreeMap<u32, String>,
    ) -> Self {
        Self {
            image_id: image_id.to_string(),
            detections: dets
                .iter()
                .map(|d| DetectedInstance {
                    tag: tags
                        .get(&d.class_id)
                        .cloned()
                        .unwrap_or_else(|| DEFAULT_TAG.to_string()),
                    score: d.score,
                    fbox: d.full,
                    vbox: Some(d.visible),
                })
                .collect(),
        }
    }
}

/// Joins annotations with detections by image id, in annotation order.
/// Images without a detection line get an empty detection list.
pub fn join_images(
    gt: &[AnnotationRecord],
    dt: &[DetectionRecord],
    min_score: f64,
) -> Vec<ImageInput> {
    let classes = class_ids(dt);
    let by_id: BTreeMap<&str, &DetectionRecord> =
        dt.iter().map(|r| (r.image_id.as_str(), r)).collect();
    gt.iter()
        .map(|a| ImageInput {
            id: a.image_id.clone(),
            dets: by_id
                .get(a.image_id.as_str())
                .map(|r| r.scored_full(&classes))
                .unwrap_or_default()
                .into_iter()
                .filter(|d| d.score >= min_score)
                .collect(),
            gts: a.ground_truth(),
        })
        .collect()
}

pub fn scene_annotation(scene: &SyntheticScene, image_id: &str) -> AnnotationRecord {
    AnnotationRecord {
        image_id: image_id.to_string(),
        instances: scene
            .instances
            .iter()
            .map(|i| AnnotatedInstance {
                tag: DEFAULT_TAG.to_string(),
                fbox: i.full,
                vbox: Some(i.visible),
                hbox: Some(i.head),
                ignore: false,
            })
            .collect(),
    }
}

pub fn scene_detections(image_id: &str, dets: &[PairedDetection]) -> DetectionRecord {
    DetectionRecord::from_paired(image_id, dets, &BTreeMap::new())
}
