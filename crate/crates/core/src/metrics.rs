//! ADD / ADD-S pose errors, accuracy at 10% of the diameter, and the
//! segmentation and offset losses evaluated forward only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RigidPose, TriangleMesh, Vec3};
use crate::spatial::KdTree;

/// Fraction of the object diameter below which a pose counts as correct.
pub const ACCURACY_THRESHOLD_REL: f64 = 0.1;

/// Model sizes above which ADD-S switches from brute force to the k-d tree.
pub const ADDS_INDEX_MIN_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseErrorReport {
    pub add: f64,
    pub adds: f64,
    pub threshold: f64,
    pub correct_add: bool,
    pub correct_adds: bool,
    pub symmetric: bool,
}

impl PoseErrorReport {
    /// The metric used for accuracy: ADD-S for symmetric objects when asked to.
    pub fn selected(&self, use_adds_for_symmetric: bool) -> f64 {
        if use_adds_for_symmetric && self.symmetric {
            self.adds
        } else {
            self.add
        }
    }
}

/// Mean index-matched distance between model points under both poses.
pub fn add_points(model: &[Vec3], pred: &RigidPose, gt: &RigidPose) -> Result<f64> {
    if model.is_empty() {
        return Err(Error::Empty("ADD needs model points".into()));
    }
    let sum: f64 = model.iter().map(|x| (pred.apply(x) - gt.apply(x)).norm()).sum();
    Ok(sum / model.len() as f64)
}

pub fn add_metric(mesh: &TriangleMesh, pred: &RigidPose, gt: &RigidPose) -> Result<f64> {
    add_points(mesh.vertices(), pred, gt)
}

/// Closest-point ADD-S by exhaustive search.
pub fn adds_points_brute_force(model: &[Vec3], pred: &RigidPose, gt: &RigidPose) -> Result<f64> {
    if model.is_empty() {
        return Err(Error::Empty("ADD-S needs model points".into()));
    }
    let target: Vec<Vec3> = model.iter().map(|x| gt.apply(x)).collect();
    let sum: f64 = model
        .iter()
        .map(|x| {
            let p = pred.apply(x);
            target
                .iter()
                .map(|t| (p - t).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    Ok(sum / model.len() as f64)
}

/// Closest-point ADD-S through a k-d tree over the ground-truth points.
pub fn adds_points_indexed(model: &[Vec3], pred: &RigidPose, gt: &RigidPose) -> Result<f64> {
    if model.is_empty() {
        return Err(Error::Empty("ADD-S needs model points".into()));
    }
    let target: Vec<Vec3> = model.iter().map(|x| gt.apply(x)).collect();
    let tree = KdTree::new(&target);
    let sum: f64 = model
        .iter()
        .map(|x| {
            tree.nearest_distance_squared(&pred.apply(x))
                .expect("tree is non-empty")
                .sqrt()
        })
        .sum();
    Ok(sum / model.len() as f64)
}

pub fn adds_points(model: &[Vec3], pred: &RigidPose, gt: &RigidPose) -> Result<f64> {
    if model.len() >= ADDS_INDEX_MIN_POINTS {
        adds_points_indexed(model, pred, gt)
    } else {
        adds_points_brute_force(model, pred, gt)
    }
}

pub fn adds_metric(mesh: &TriangleMesh, pred: &RigidPose, gt: &RigidPose) -> Result<f64> {
    adds_points(mesh.vertices(), pred, gt)
}

pub fn evaluate_pose(mesh: &TriangleMesh, pred: &RigidPose, gt: &RigidPose, symmetric: bool) -> Result<PoseErrorReport> {
    let add = add_metric(mesh, pred, gt)?;
    let adds = adds_metric(mesh, pred, gt)?;
    let threshold = ACCURACY_THRESHOLD_REL * mesh.diameter();
    Ok(PoseErrorReport {
        add,
        adds,
        threshold,
        correct_add: add < threshold,
        correct_adds: adds < threshold,
        symmetric,
    })
}

/// Fraction of reports whose selected metric is strictly below their threshold.
pub fn accuracy_at_threshold(reports: &[PoseErrorReport], use_adds_for_symmetric: bool) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::Empty("no pose reports to score".into()));
    }
    let hits = reports
        .iter()
        .filter(|r| r.selected(use_adds_for_symmetric) < r.threshold)
        .count();
    Ok(hits as f64 / reports.len() as f64)
}

/// One evaluation row: per-object means and accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub object: String,
    pub n_frames: usize,
    pub add_mean: f64,
    pub adds_mean: f64,
    #[serde(rename = "acc@0.1d")]
    pub accuracy: f64,
    pub symmetric: bool,
}

pub fn summarize(object: &str, reports: &[PoseErrorReport], use_adds_for_symmetric: bool) -> Result<EvalSummary> {
    let accuracy = accuracy_at_threshold(reports, use_adds_for_symmetric)?;
    let n = reports.len() as f64;
    Ok(EvalSummary {
        object: object.to_string(),
        n_frames: reports.len(),
        add_mean: reports.iter().map(|r| r.add).sum::<f64>() / n,
        adds_mean: reports.iter().map(|r| r.adds).sum::<f64>() / n,
        accuracy,
        symmetric: reports.iter().any(|r| r.symmetric),
    })
}

/// Mean of `-α (1 - p)^γ ln p` over true-class probabilities.
pub fn focal_loss(prob_true_class: &[f64], alpha: f64, gamma: f64) -> Result<f64> {
    if prob_true_class.is_empty() {
        return Err(Error::Empty("focal loss over no entries".into()));
    }
    let mut sum = 0.0;
    for &p in prob_true_class {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("probability {p} outside (0, 1]")));
        }
        sum += -alpha * (1.0 - p).powf(gamma) * p.ln();
    }
    Ok(sum / prob_true_class.len() as f64)
}

/// Mean absolute component difference over masked points and all keypoints,
/// i.e. divided by `3 · points · keypoints`.
pub fn l1_offset_loss(pred: &[Vec<Vec3>], gt: &[Vec<Vec3>], mask: &[bool]) -> Result<f64> {
    if pred.len() != gt.len() || pred.len() != mask.len() {
        return Err(Error::invalid("offset tensors and mask differ in length"));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((p, g), _) in pred.iter().zip(gt).zip(mask).filter(|(_, &m)| m) {
        if p.len() != g.len() {
            return Err(Error::invalid("keypoint count differs between prediction and target"));
        }
        for (a, b) in p.iter().zip(g) {
            sum += (a - b).abs().sum();
            count += 3;
        }
    }
    if count == 0 {
        return Err(Error::Empty("mask selects no points".into()));
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub seg: f64,
    pub kp: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { seg: 1.0, kp: 1.0 }
    }
}

pub fn joint_loss(seg_loss: f64, kp_loss: f64, weights: LossWeights) -> Result<f64> {
    if !(weights.seg >= 0.0 && weights.kp >= 0.0) {
        return Err(Error::invalid("loss weights must be non-negative"));
    }
    Ok(weights.seg * seg_loss + weights.kp * kp_loss)
}
