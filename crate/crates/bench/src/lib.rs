//! Deterministic inputs for the benchmarks.

use vfg_core::association::CostMatrix;
use vfg_core::evaluation::{GroundTruthInstance, ImageInput};
use vfg_core::nms::PairedDetection;
use vfg_core::sim::{generate_scene, perturb_detections, NoiseModel, SceneConfig};

/// Noisy detections pooled from `scenes` simulated crowds.
pub fn crowd_detections(scenes: usize, crowd_level: f64) -> Vec<PairedDetection> {
    (0..scenes as u64)
        .flat_map(|seed| {
            let cfg = SceneConfig {
                seed,
                crowd_level,
                ..Default::default()
            };
            let scene = generate_scene(&cfg).expect("default scene config is placeable");
            perturb_detections(&scene, &NoiseModel::default(), !seed)
                .expect("default noise is valid")
        })
        .collect()
}

/// One evaluation image per simulated scene.
pub fn eval_images(scenes: usize) -> Vec<ImageInput> {
    (0..scenes as u64)
        .map(|seed| {
            let scene = generate_scene(&SceneConfig {
                seed,
                ..Default::default()
            })
            .expect("default scene config is placeable");
            let dets = perturb_detections(&scene, &NoiseModel::default(), !seed)
                .expect("default noise is valid");
            ImageInput {
                id: seed.to_string(),
                dets: dets.iter().map(PairedDetection::full_scored).collect(),
                gts: scene
                    .instances
                    .iter()
                    .map(|i| GroundTruthInstance::new(i.full).with_visible(i.visible))
                    .collect(),
            }
        })
        .collect()
}

/// `n x n` costs from a fixed linear congruential sequence.
pub fn cost_matrix(n: usize) -> CostMatrix {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let data = (0..n * n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    CostMatrix::new(n, n, data).expect("finite costs")
}
