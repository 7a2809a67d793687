//! Scoring predicted body-model parameters against a manifest.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dataset::Manifest;
use crate::error::{Error, Result};
use crate::metrics::{mpjpe, pck, v2v, AlignMode, Keypoints2d};
use crate::model::{pose_mesh, BodyModelAsset, PoseParams, ShapeParams};
use crate::render::{project_points, CameraSpec};

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub betas: Vec<f64>,
    pub pose: PoseParams,
    /// Camera used to project predicted joints; the ground-truth camera when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraSpec>,
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| Error::Eval(format!("predictions line {}: {e}", n + 1)))
        })
        .collect()
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMetrics {
    pub sample_id: String,
    pub pck: f64,
    pub mpjpe: f64,
    pub s_mpjpe: f64,
    pub pa_mpjpe: f64,
    pub s_v2v: f64,
    pub pa_v2v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_sample: Vec<SampleMetrics>,
    pub mean: SampleMetrics,
    pub alpha: f64,
}

const COLUMNS: [&str; 6] = ["pck", "mpjpe", "s_mpjpe", "pa_mpjpe", "s_v2v", "pa_v2v"];

impl SampleMetrics {
    fn values(&self) -> [f64; 6] {
        [self.pck, self.mpjpe, self.s_mpjpe, self.pa_mpjpe, self.s_v2v, self.pa_v2v]
    }
}

impl EvalReport {
    /// Per-sample rows followed by a `mean` row, in input units.
    pub fn to_csv(&self) -> String {
        let mut out = format!("sample_id,{}\n", COLUMNS.join(","));
        for m in self.per_sample.iter().chain(std::iter::once(&self.mean)) {
            let vals: Vec<String> = m.values().iter().map(|v| format!("{v:.9}")).collect();
            let _ = writeln!(out, "{},{}", m.sample_id, vals.join(","));
        }
        out
    }

    /// Aggregate table; distances are multiplied by `multiplier` for display.
    pub fn to_text(&self, multiplier: f64) -> String {
        let m = &self.mean;
        let mut out = String::new();
        let _ = writeln!(out, "samples     {}", self.per_sample.len());
        let _ = writeln!(out, "PCK@{:<7} {:.4}", self.alpha, m.pck);
        for (name, v) in [
            ("MPJPE", m.mpjpe),
            ("S-MPJPE", m.s_mpjpe),
            ("PA-MPJPE", m.pa_mpjpe),
            ("S-V2V", m.s_v2v),
            ("PA-V2V", m.pa_v2v),
        ] {
            let _ = writeln!(out, "{name:<11} {:.2}", v * multiplier);
        }
        let _ = writeln!(out, "(distances x{multiplier})");
        out
    }
}

fn visible_keypoints(asset: &BodyModelAsset, camera: &CameraSpec, joints: &[Vector3<f64>]) -> Result<Keypoints2d> {
    let size = camera.image_size as f64;
    let proj = project_points(camera, joints);
    Keypoints2d::new(
        asset.joint_names().to_vec(),
        proj.iter().map(|p| p.uv).collect(),
        proj.iter()
            .map(|p| p.valid && (0.0..size).contains(&p.uv[0]) && (0.0..size).contains(&p.uv[1]))
            .collect(),
    )
}

/// Scores every manifest sample; predictions and samples must match one to one.
pub fn evaluate(asset: &BodyModelAsset, manifest: &Manifest, predictions: &[Prediction], alpha: f64) -> Result<EvalReport> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        if by_id.insert(&p.sample_id, p).is_some() {
            return Err(Error::Eval(format!("duplicate prediction for sample {}", p.sample_id)));
        }
    }
    let known: BTreeSet<&str> = manifest.records.iter().map(|r| r.sample_id.as_str()).collect();
    let unmatched: Vec<&str> = predictions
        .iter()
        .map(|p| p.sample_id.as_str())
        .filter(|id| !known.contains(id))
        .collect();
    if !unmatched.is_empty() {
        return Err(Error::Eval(format!("predictions for unknown samples: {}", unmatched.join(", "))));
    }
    let missing: Vec<&str> = known.iter().copied().filter(|id| !by_id.contains_key(id)).collect();
    if !missing.is_empty() {
        return Err(Error::Eval(format!("no prediction for samples: {}", missing.join(", "))));
    }

    let tags = asset.tags();
    let mut per_sample = Vec::with_capacity(manifest.records.len());
    for rec in &manifest.records {
        let pred = by_id[rec.sample_id.as_str()];
        let ctx = |e: Error| Error::Eval(format!("sample {}: {e}", rec.sample_id));
        let gt_mesh = pose_mesh(asset, &ShapeParams { betas: rec.betas.clone() }, &rec.pose).map_err(ctx)?;
        let pr_mesh = pose_mesh(asset, &ShapeParams { betas: pred.betas.clone() }, &pred.pose).map_err(ctx)?;
        let (gj, pj) = (&gt_mesh.joints_posed, &pr_mesh.joints_posed);
        let (gv, pv) = (&gt_mesh.vertices, &pr_mesh.vertices);

        let gt_kp = visible_keypoints(asset, &rec.camera, gj).map_err(ctx)?;
        let pred_cam = pred.camera.as_ref().unwrap_or(&rec.camera);
        let pred_2d: Vec<[f64; 2]> = project_points(pred_cam, pj)
            .iter()
            .map(|p| if p.valid { p.uv } else { [f64::NAN; 2] })
            .collect();

        per_sample.push(SampleMetrics {
            sample_id: rec.sample_id.clone(),
            pck: pck(&pred_2d, &gt_kp, &tags.head, &tags.tail_base, alpha).map_err(ctx)?,
            mpjpe: mpjpe(pj, gj, AlignMode::Raw).map_err(ctx)?,
            s_mpjpe: mpjpe(pj, gj, AlignMode::Scale).map_err(ctx)?,
            pa_mpjpe: mpjpe(pj, gj, AlignMode::Procrustes).map_err(ctx)?,
            s_v2v: v2v(pv, gv, AlignMode::Scale).map_err(ctx)?,
            pa_v2v: v2v(pv, gv, AlignMode::Procrustes).map_err(ctx)?,
        });
    }
    let n = per_sample.len().max(1) as f64;
    let mut sums = [0.0; 6];
    for m in &per_sample {
        for (s, v) in sums.iter_mut().zip(m.values()) {
            *s += v;
        }
    }
    let mean = SampleMetrics {
        sample_id: "mean".into(),
        pck: sums[0] / n,
        mpjpe: sums[1] / n,
        s_mpjpe: sums[2] / n,
        pa_mpjpe: sums[3] / n,
        s_v2v: sums[4] / n,
        pa_v2v: sums[5] / n,
    };
    Ok(EvalReport { per_sample, mean, alpha })
}

/// Predictions equal to the manifest's ground truth.
pub fn ground_truth_predictions(manifest: &Manifest) -> Vec<Prediction> {
    manifest
        .records
        .iter()
        .map(|r| Prediction {
            sample_id: r.sample_id.clone(),
            betas: r.betas.clone(),
            pose: r.pose.clone(),
            camera: None,
        })
        .collect()
}
