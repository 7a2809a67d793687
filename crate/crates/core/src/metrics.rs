//! Pose and shape evaluation metrics: similarity alignment, MPJPE and V2V
//! variants, and 2D PCK.
//!
//! Alignment always maps predictions onto ground truth, so aligned metrics
//! are not symmetric in their arguments. Values are in input units.

use std::collections::HashSet;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cosmetic factor applied when printing distance metrics.
pub const DISPLAY_MULTIPLIER: f64 = 1000.0;
pub const DEFAULT_PCK_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    /// Distance from each aligned prediction to its ground-truth point.
    pub residuals: Vec<f64>,
}

impl AlignmentResult {
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p * self.scale + self.translation
    }

    pub fn mean_residual(&self) -> f64 {
        self.residuals.iter().sum::<f64>() / self.residuals.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    Raw,
    /// Scale and translation only.
    Scale,
    /// Scale, rotation and translation.
    Procrustes,
}

fn check_pair(pred: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidArgument(format!(
            "point count mismatch: {} predicted, {} ground truth",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("no points to compare".into()));
    }
    if pred.iter().chain(gt).any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidArgument("points contain non-finite coordinates".into()));
    }
    Ok(())
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

pub fn mean_distance(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Result<f64> {
    check_pair(a, b)?;
    Ok(a.iter().zip(b).map(|(p, q)| (p - q).norm()).sum::<f64>() / a.len() as f64)
}

/// Least-squares similarity fit of `pred` onto `gt`.
pub fn align_similarity(pred: &[Vector3<f64>], gt: &[Vector3<f64>], with_rotation: bool) -> Result<AlignmentResult> {
    check_pair(pred, gt)?;
    let (mp, mg) = (centroid(pred), centroid(gt));
    let pc: Vec<_> = pred.iter().map(|p| p - mp).collect();
    let gc: Vec<_> = gt.iter().map(|g| g - mg).collect();
    let var_p: f64 = pc.iter().map(|p| p.norm_squared()).sum();
    let spread = pc.iter().chain(&gc).map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    if var_p.sqrt() <= 1e-12 * spread {
        return Err(Error::DegenerateInput("predicted points have no spread".into()));
    }

    let (scale, rotation) = if with_rotation {
        if pred.len() < 3 {
            return Err(Error::DegenerateInput("rotation alignment needs at least 3 points".into()));
        }
        let scatter: Matrix3<f64> = pc.iter().map(|p| p * p.transpose()).sum();
        let sv = scatter.symmetric_eigenvalues();
        let mut ev: Vec<f64> = sv.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        if ev[1] <= 1e-12 * ev[0] {
            return Err(Error::DegenerateInput("predicted points are collinear".into()));
        }
        let h: Matrix3<f64> = gc.iter().zip(&pc).map(|(g, p)| g * p.transpose()).sum();
        let svd = h.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut d = Matrix3::identity();
        if (u * v_t).determinant() < 0.0 {
            let smallest = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            d[(smallest, smallest)] = -1.0;
        }
        let r = u * d * v_t;
        let trace: f64 = (0..3).map(|i| svd.singular_values[i] * d[(i, i)]).sum();
        (trace / var_p, r)
    } else {
        let dot: f64 = pc.iter().zip(&gc).map(|(p, g)| p.dot(g)).sum();
        ((dot / var_p).max(0.0), Matrix3::identity())
    };

    let translation = mg - rotation * mp * scale;
    let residuals = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| (rotation * p * scale + translation - g).norm())
        .collect();
    Ok(AlignmentResult { scale, rotation, translation, residuals })
}

fn aligned_error(pred: &[Vector3<f64>], gt: &[Vector3<f64>], mode: AlignMode) -> Result<f64> {
    match mode {
        AlignMode::Raw => mean_distance(pred, gt),
        AlignMode::Scale => Ok(align_similarity(pred, gt, false)?.mean_residual()),
        AlignMode::Procrustes => Ok(align_similarity(pred, gt, true)?.mean_residual()),
    }
}

/// Mean per-joint position error after the mode's alignment.
pub fn mpjpe(pred: &[Vector3<f64>], gt: &[Vector3<f64>], mode: AlignMode) -> Result<f64> {
    aligned_error(pred, gt, mode)
}

/// Mean per-vertex distance after the mode's alignment; meshes must share topology.
pub fn v2v(pred: &[Vector3<f64>], gt: &[Vector3<f64>], mode: AlignMode) -> Result<f64> {
    aligned_error(pred, gt, mode)
}

/// Named 2D keypoints with visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct Keypoints2d {
    names: Vec<String>,
    points: Vec<[f64; 2]>,
    visible: Vec<bool>,
}

impl Keypoints2d {
    pub fn new(names: Vec<String>, points: Vec<[f64; 2]>, visible: Vec<bool>) -> Result<Self> {
        if names.len() != points.len() || names.len() != visible.len() {
            return Err(Error::InvalidArgument("keypoint names, points and flags differ in length".into()));
        }
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::InvalidArgument("keypoint names are not unique".into()));
        }
        Ok(Self { names, points, visible })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn visible(&self) -> &[bool] {
        &self.visible
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Fraction of visible ground-truth keypoints whose prediction lies within
/// `alpha` times the ground-truth head-to-tail length.
pub fn pck(pred: &[[f64; 2]], gt: &Keypoints2d, head: &str, tail: &str, alpha: f64) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidArgument(format!(
            "keypoint count mismatch: {} predicted, {} ground truth",
            pred.len(),
            gt.len()
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {alpha}")));
    }
    let lookup = |name: &str| {
        gt.index(name)
            .filter(|&i| gt.visible[i])
            .ok_or_else(|| Error::InvalidArgument(format!("keypoint '{name}' missing or not visible")))
    };
    let (h, t) = (lookup(head)?, lookup(tail)?);
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let length = dist(gt.points[h], gt.points[t]);
    if !(length > 0.0) {
        return Err(Error::DegenerateInput("head-tail length is zero".into()));
    }
    let tau = alpha * length;
    let mut total = 0usize;
    let mut hits = 0usize;
    for i in (0..gt.len()).filter(|&i| gt.visible[i]) {
        total += 1;
        if dist(pred[i], gt.points[i]) <= tau {
            hits += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    fn cloud() -> Vec<Vector3<f64>> {
        vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.2, 0.0),
            Vector3::new(0.3, 1.1, 0.4),
            Vector3::new(-0.5, 0.7, 1.2),
            Vector3::new(0.9, -0.8, 0.3),
        ]
    }

    #[test]
    fn identity_alignment() {
        let a = align_similarity(&cloud(), &cloud(), true).unwrap();
        assert!((a.scale - 1.0).abs() < 1e-12);
        assert!((a.rotation - Matrix3::identity()).norm() < 1e-12);
        assert!(a.translation.norm() < 1e-12);
        assert!(a.mean_residual() < 1e-12);
    }

    #[test]
    fn recovers_scaled_rotation() {
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
        let gt = cloud();
        let pred: Vec<_> = gt.iter().map(|p| r * p * 2.0).collect();
        let a = align_similarity(&pred, &gt, true).unwrap();
        assert!((a.scale - 0.5).abs() < 1e-9);
        assert!(a.mean_residual() < 1e-9);
    }

    #[test]
    fn offset_absorbed_in_scale_mode() {
        let gt = cloud();
        let pred: Vec<_> = gt.iter().map(|p| p + Vector3::new(3.0, -1.0, 2.0)).collect();
        assert!(mpjpe(&pred, &gt, AlignMode::Scale).unwrap() < 1e-12);
        assert!(mpjpe(&pred, &gt, AlignMode::Raw).unwrap() > 1.0);
    }

    #[test]
    fn collinear_rejected() {
        let line: Vec<_> = (0..4).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(align_similarity(&line, &cloud()[..4], true), Err(Error::DegenerateInput(_))));
        assert!(align_similarity(&line, &cloud()[..4], false).is_ok());
    }

    #[test]
    fn pck_hand_example() {
        let names = vec!["head".to_string(), "tail".to_string(), "paw".to_string()];
        let gt = Keypoints2d::new(names, vec![[0.0, 0.0], [10.0, 0.0], [5.0, 5.0]], vec![true; 3]).unwrap();
        let pred = [[3.0, 0.0], [10.0, 1.0], [5.0, 11.0]];
        let v = pck(&pred, &gt, "head", "tail", 0.5).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pck_zero_length() {
        let names = vec!["head".to_string(), "tail".to_string()];
        let gt = Keypoints2d::new(names, vec![[1.0, 1.0], [1.0, 1.0]], vec![true; 2]).unwrap();
        assert!(matches!(
            pck(gt.points(), &gt, "head", "tail", 0.5),
            Err(Error::DegenerateInput(_))
        ));
    }
}
