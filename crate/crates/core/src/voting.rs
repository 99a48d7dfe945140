//! Offset voting, mean-shift mode seeking and least-squares rigid fitting.
//!
//! Every labelled scene point casts one vote per keypoint (`point + offset`,
//! camera frame). Each keypoint's votes are clustered with a Gaussian-kernel
//! mean shift and the highest-support mode becomes the keypoint estimate. The
//! pose is then the closed-form least-squares alignment of the object-frame
//! keypoints onto the voted camera-frame keypoints.

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Mat3, PointCloud, RigidPose, Vec3};
use crate::keypoints::KeypointSet;
use crate::rng;

/// Default bandwidth as a fraction of the object diameter.
pub const DEFAULT_BANDWIDTH_REL: f64 = 0.05;
pub const DEFAULT_MAX_SEEDS: usize = 500;
pub const MEAN_SHIFT_TOL: f64 = 1e-6;
pub const MEAN_SHIFT_MAX_ITER: usize = 300;
/// Relative singular-value floor below which a fit is declared degenerate.
pub const DEGENERATE_RATIO: f64 = 1e-12;

/// Per-point predicted keypoint offsets, labels and optional confidences.
///
/// Offsets are stored flat: point `i` owns `offsets[i * n_keypoints..][..n_keypoints]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetPrediction {
    n_keypoints: usize,
    offsets: Vec<Vec3>,
    pub labels: Vec<u32>,
    pub confidence: Option<Vec<f64>>,
}

impl OffsetPrediction {
    pub fn new(n_keypoints: usize, offsets: Vec<Vec3>, labels: Vec<u32>, confidence: Option<Vec<f64>>) -> Result<Self> {
        if n_keypoints == 0 {
            return Err(Error::invalid("predictions need at least one keypoint"));
        }
        if offsets.len() != labels.len() * n_keypoints {
            return Err(Error::invalid(format!(
                "{} offsets do not match {} points x {n_keypoints} keypoints",
                offsets.len(),
                labels.len()
            )));
        }
        if let Some(c) = &confidence {
            if c.len() != labels.len() {
                return Err(Error::invalid("confidence length differs from point count"));
            }
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid("confidence outside [0, 1]"));
            }
        }
        Ok(Self {
            n_keypoints,
            offsets,
            labels,
            confidence,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_keypoints(&self) -> usize {
        self.n_keypoints
    }

    pub fn offsets_of(&self, point: usize) -> &[Vec3] {
        &self.offsets[point * self.n_keypoints..(point + 1) * self.n_keypoints]
    }

    pub fn offsets_of_mut(&mut self, point: usize) -> &mut [Vec3] {
        let n = self.n_keypoints;
        &mut self.offsets[point * n..(point + 1) * n]
    }
}

/// Votes for each keypoint with their kernel weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteSet {
    pub votes: Vec<Vec3>,
    pub weights: Option<Vec<f64>>,
}

/// Casts `point + offset_k` for every point carrying `target_label`.
///
/// Votes with non-finite coordinates or zero confidence are dropped, so a
/// keypoint can end up with fewer votes than there are object points.
pub fn cast_votes(cloud: &PointCloud, preds: &OffsetPrediction, target_label: u32) -> Result<Vec<VoteSet>> {
    if cloud.len() != preds.len() {
        return Err(Error::invalid(format!(
            "cloud has {} points but predictions cover {}",
            cloud.len(),
            preds.len()
        )));
    }
    let members: Vec<usize> = (0..preds.len()).filter(|&i| preds.labels[i] == target_label).collect();
    if members.is_empty() {
        return Err(Error::ObjectNotFound(target_label));
    }
    let sets = (0..preds.n_keypoints())
        .map(|k| {
            let mut votes = Vec::with_capacity(members.len());
            let mut weights = preds.confidence.as_ref().map(|_| Vec::with_capacity(members.len()));
            for &i in &members {
                let vote = cloud.points[i] + preds.offsets_of(i)[k];
                if !vote.iter().all(|c| c.is_finite()) {
                    continue;
                }
                if let (Some(w), Some(conf)) = (weights.as_mut(), preds.confidence.as_ref()) {
                    if conf[i] <= 0.0 {
                        continue;
                    }
                    w.push(conf[i]);
                }
                votes.push(vote);
            }
            VoteSet { votes, weights }
        })
        .collect();
    Ok(sets)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanShiftParams {
    pub bandwidth: f64,
    /// Seeds are every vote up to this count, a seeded subsample above it.
    pub max_seeds: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl MeanShiftParams {
    pub fn new(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            max_seeds: DEFAULT_MAX_SEEDS,
            seed: 0,
            max_iter: MEAN_SHIFT_MAX_ITER,
            tolerance: MEAN_SHIFT_TOL,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub position: Vec3,
    /// Votes within one bandwidth of `position`.
    pub support: usize,
    /// Distinct modes left after merging.
    pub clusters: usize,
}

/// Gaussian-kernel mean shift returning the mode with the largest support.
///
/// Support is the number of votes within one bandwidth of a mode; with
/// `weights` the winner is chosen by the summed weight inside that ball.
/// Votes are put in lexicographic order first, so the result does not depend
/// on the order of the input list. Converged modes closer than half a
/// bandwidth to a better-supported mode are merged into it.
pub fn mean_shift(votes: &[Vec3], weights: Option<&[f64]>, params: &MeanShiftParams) -> Result<Mode> {
    if votes.is_empty() {
        return Err(Error::Empty("mean shift needs at least one vote".into()));
    }
    if !(params.bandwidth > 0.0) || !params.bandwidth.is_finite() {
        return Err(Error::invalid(format!("bandwidth must be positive, got {}", params.bandwidth)));
    }
    if let Some(w) = weights {
        if w.len() != votes.len() {
            return Err(Error::invalid("vote weights length differs from vote count"));
        }
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("vote weights must be finite and non-negative"));
        }
    }

    let mut order: Vec<usize> = (0..votes.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&votes[a], &votes[b]);
        p.x.total_cmp(&q.x)
            .then(p.y.total_cmp(&q.y))
            .then(p.z.total_cmp(&q.z))
            .then_with(|| match weights {
                Some(w) => w[a].total_cmp(&w[b]),
                None => std::cmp::Ordering::Equal,
            })
    });
    let sorted: Vec<Vec3> = order.iter().map(|&i| votes[i]).collect();
    let sorted_w: Option<Vec<f64>> = weights.map(|w| order.iter().map(|&i| w[i]).collect());

    let seeds: Vec<usize> = if sorted.len() > params.max_seeds.max(1) {
        let mut rng = rng::stream(params.seed, rng::STREAM_MEAN_SHIFT);
        let mut s = index::sample(&mut rng, sorted.len(), params.max_seeds.max(1)).into_vec();
        s.sort_unstable();
        s
    } else {
        (0..sorted.len()).collect()
    };

    let inv_two_h2 = 1.0 / (2.0 * params.bandwidth * params.bandwidth);
    let h2 = params.bandwidth * params.bandwidth;
    // (mode, votes in ball, summed weight in ball)
    let mut modes: Vec<(Vec3, usize, f64)> = seeds
        .iter()
        .map(|&s| {
            let m = climb(&sorted, sorted_w.as_deref(), sorted[s], inv_two_h2, params);
            let mut count = 0;
            let mut mass = 0.0;
            for (i, v) in sorted.iter().enumerate() {
                if (v - m).norm_squared() <= h2 {
                    count += 1;
                    mass += sorted_w.as_ref().map_or(1.0, |w| w[i]);
                }
            }
            (m, count, mass)
        })
        .collect();

    // Stable: equal support keeps seed order.
    modes.sort_by(|a, b| b.2.total_cmp(&a.2));
    let merge2 = 0.25 * h2;
    let mut kept: Vec<(Vec3, usize, f64)> = Vec::new();
    for mode in modes {
        if kept.iter().all(|k| (k.0 - mode.0).norm_squared() >= merge2) {
            kept.push(mode);
        }
    }
    let (position, support, _) = kept[0];
    Ok(Mode {
        position,
        support,
        clusters: kept.len(),
    })
}

fn climb(votes: &[Vec3], weights: Option<&[f64]>, start: Vec3, inv_two_h2: f64, params: &MeanShiftParams) -> Vec3 {
    let mut x = start;
    for _ in 0..params.max_iter {
        let mut num = Vec3::zeros();
        let mut den = 0.0;
        for (i, v) in votes.iter().enumerate() {
            let mut w = (-(v - x).norm_squared() * inv_two_h2).exp();
            if let Some(ws) = weights {
                w *= ws[i];
            }
            num += w * v;
            den += w;
        }
        if !(den > 0.0) {
            break;
        }
        let next = num / den;
        let step = (next - x).norm();
        x = next;
        if step < params.tolerance {
            break;
        }
    }
    x
}

/// Least-squares rigid alignment `camera ≈ R·model + T`.
///
/// Centroid subtraction, SVD of the cross-covariance, and a reflection fix that
/// negates the singular direction with the smallest singular value when the
/// naive solution has determinant -1.
pub fn arun_fit(model_pts: &[Vec3], camera_pts: &[Vec3]) -> Result<RigidPose> {
    if model_pts.len() != camera_pts.len() {
        return Err(Error::invalid(format!(
            "{} model points vs {} camera points",
            model_pts.len(),
            camera_pts.len()
        )));
    }
    if model_pts.len() < 3 {
        return Err(Error::invalid(format!("rigid fit needs at least 3 correspondences, got {}", model_pts.len())));
    }
    let n = model_pts.len() as f64;
    let pm: Vec3 = model_pts.iter().sum::<Vec3>() / n;
    let cm: Vec3 = camera_pts.iter().sum::<Vec3>() / n;
    let mut h = Mat3::zeros();
    for (p, c) in model_pts.iter().zip(camera_pts) {
        h += (p - pm) * (c - cm).transpose();
    }
    if !h.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("non-finite correspondences"));
    }

    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();
    let s = svd.singular_values;
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let (s_max, s_mid) = (s[idx[0]], s[idx[1]]);
    if !(s_max > 0.0) || s_mid < DEGENERATE_RATIO * s_max {
        return Err(Error::Degenerate(format!(
            "correspondences are collinear or coincident (singular values {:?})",
            s.as_slice()
        )));
    }

    let mut rotation = v * u.transpose();
    if rotation.determinant() < 0.0 {
        let mut v_fixed = v;
        v_fixed.column_mut(idx[2]).neg_mut();
        rotation = v_fixed * u.transpose();
    }
    let translation = cm - rotation * pm;
    Ok(RigidPose {
        rotation,
        translation,
    })
}

/// Sum of squared alignment residuals.
pub fn fit_loss(model_pts: &[Vec3], camera_pts: &[Vec3], pose: &RigidPose) -> f64 {
    model_pts
        .iter()
        .zip(camera_pts)
        .map(|(p, c)| (c - pose.apply(p)).norm_squared())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VotedKeypoints {
    pub positions: Vec<Vec3>,
    pub support_counts: Vec<usize>,
    pub vote_counts: Vec<usize>,
    /// Support over total votes, per keypoint.
    pub inlier_fraction: Vec<f64>,
    pub clusters: Vec<usize>,
}

/// Votes, clusters every keypoint and fits the pose.
pub fn estimate_pose(
    cloud: &PointCloud,
    preds: &OffsetPrediction,
    keypoints: &KeypointSet,
    target_label: u32,
    params: &MeanShiftParams,
) -> Result<(RigidPose, VotedKeypoints)> {
    if preds.n_keypoints() != keypoints.len() {
        return Err(Error::invalid(format!(
            "predictions carry {} offsets per point, keypoint set has {}",
            preds.n_keypoints(),
            keypoints.len()
        )));
    }
    let sets = cast_votes(cloud, preds, target_label)?;
    let missing: Vec<usize> = sets
        .iter()
        .enumerate()
        .filter(|(_, s)| s.votes.is_empty())
        .map(|(k, _)| k)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingVotes(missing));
    }
    let modes: Vec<Mode> = sets
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let p = params.with_seed(rng::derive_seed(params.seed, k as u64));
            mean_shift(&s.votes, s.weights.as_deref(), &p)
        })
        .collect::<Result<_>>()?;
    let positions: Vec<Vec3> = modes.iter().map(|m| m.position).collect();
    let pose = arun_fit(&keypoints.points, &positions)?;
    let vote_counts: Vec<usize> = sets.iter().map(|s| s.votes.len()).collect();
    let voted = VotedKeypoints {
        support_counts: modes.iter().map(|m| m.support).collect(),
        inlier_fraction: modes
            .iter()
            .zip(&vote_counts)
            .map(|(m, &n)| m.support as f64 / n as f64)
            .collect(),
        clusters: modes.iter().map(|m| m.clusters).collect(),
        vote_counts,
        positions,
    };
    Ok((pose, voted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    fn rz90() -> RigidPose {
        RigidPose::from_axis_angle(Vec3::z(), std::f64::consts::FRAC_PI_2, Vec3::new(1.0, 2.0, 3.0))
    }

    fn gaussian_blob(rng: &mut ChaCha8Rng, center: Vec3, sigma: f64, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                center
                    + sigma
                        * Vec3::new(
                            rng.sample(StandardNormal),
                            rng.sample(StandardNormal),
                            rng.sample(StandardNormal),
                        )
            })
            .collect()
    }

    #[test]
    fn identical_votes() {
        let v = Vec3::new(0.1, -0.2, 0.7);
        let m = mean_shift(&vec![v; 40], None, &MeanShiftParams::new(0.01)).unwrap();
        assert!((m.position - v).norm() < 1e-12);
        assert_eq!(m.support, 40);
        assert_eq!(m.clusters, 1);
    }

    #[test]
    fn mean_shift_errors() {
        assert!(mean_shift(&[], None, &MeanShiftParams::new(0.1)).is_err());
        assert!(mean_shift(&[Vec3::zeros()], None, &MeanShiftParams::new(0.0)).is_err());
        assert!(mean_shift(&[Vec3::zeros()], Some(&[1.0, 2.0]), &MeanShiftParams::new(1.0)).is_err());
    }

    #[test]
    fn single_blob_mode_near_sample_mean() {
        let h = 0.03;
        let sigma = h / 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let votes = gaussian_blob(&mut rng, Vec3::new(0.2, 0.1, 0.9), sigma, 1000);
        let mean: Vec3 = votes.iter().sum::<Vec3>() / 1000.0;
        let m = mean_shift(&votes, None, &MeanShiftParams::new(h).with_seed(3)).unwrap();
        assert!((m.position - mean).norm() < 4.0 * sigma / (1000f64).sqrt());
    }

    #[test]
    fn majority_blob_wins() {
        let h = 0.02;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = Vec3::new(0.0, 0.0, 1.0);
        let b = a + Vec3::new(15.0 * h, 0.0, 0.0);
        let mut votes = gaussian_blob(&mut rng, a, h / 4.0, 700);
        votes.extend(gaussian_blob(&mut rng, b, h / 4.0, 300));
        let m = mean_shift(&votes, None, &MeanShiftParams::new(h)).unwrap();
        assert!((m.position - a).norm() < h / 10.0);
        assert_eq!(m.clusters, 2);
    }

    #[test]
    fn confidence_weights_shift_the_winner() {
        let h = 0.01;
        let a = Vec3::zeros();
        let b = Vec3::new(1.0, 0.0, 0.0);
        let votes = vec![a, a, a, b, b];
        let m = mean_shift(&votes, None, &MeanShiftParams::new(h)).unwrap();
        assert_eq!(m.position, a);
        let w = [0.0, 0.0, 1.0, 1.0, 1.0];
        let m = mean_shift(&votes, Some(&w), &MeanShiftParams::new(h)).unwrap();
        assert_eq!(m.position, b);
        assert_eq!(m.support, 2);
    }

    #[test]
    fn mean_shift_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut votes = gaussian_blob(&mut rng, Vec3::new(0.0, 0.3, 0.5), 0.01, 900);
        let params = MeanShiftParams::new(0.02).with_seed(5);
        let before = mean_shift(&votes, None, &params).unwrap();
        for i in (1..votes.len()).rev() {
            let j = rng.random_range(0..=i);
            votes.swap(i, j);
        }
        assert_eq!(before, mean_shift(&votes, None, &params).unwrap());
    }

    #[test]
    fn arun_identity() {
        let p = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let pose = arun_fit(&p, &p).unwrap();
        assert!(pose.rotation_error(&RigidPose::identity()) < 1e-12);
        assert!(pose.translation.norm() < 1e-12);
    }

    #[test]
    fn arun_recovers_known_pose() {
        let gt = rz90();
        let p = vec![
            Vec3::new(0.1, 0.0, 0.0),
            Vec3::new(0.0, 0.2, 0.0),
            Vec3::new(0.0, 0.0, 0.3),
            Vec3::new(0.1, 0.1, 0.1),
        ];
        let c: Vec<Vec3> = p.iter().map(|x| gt.apply(x)).collect();
        let pose = arun_fit(&p, &c).unwrap();
        assert!(pose.rotation_error(&gt) < 1e-9);
        assert!(pose.translation_error(&gt) < 1e-9);
    }

    #[test]
    fn arun_coplanar_points_stay_proper() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let axis = Vec3::new(rng.random(), rng.random(), rng.random()) - Vec3::repeat(0.5);
            let gt = RigidPose::from_axis_angle(axis, rng.random_range(0.0..3.1), Vec3::new(0.0, 0.0, 1.0));
            let p: Vec<Vec3> = (0..6)
                .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0))
                .collect();
            let c: Vec<Vec3> = p.iter().map(|x| gt.apply(x)).collect();
            let pose = arun_fit(&p, &c).unwrap();
            assert!((pose.rotation.determinant() - 1.0).abs() < 1e-9);
            assert!(fit_loss(&p, &c, &pose) < 1e-9);
        }
    }

    #[test]
    fn arun_errors() {
        let p = vec![Vec3::zeros(), Vec3::x()];
        assert!(matches!(arun_fit(&p, &p), Err(Error::InvalidArgument(_))));
        let line: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(arun_fit(&line, &line), Err(Error::Degenerate(_))));
        let same = vec![Vec3::x(); 4];
        assert!(matches!(arun_fit(&same, &same), Err(Error::Degenerate(_))));
        assert!(arun_fit(&line, &line[..4]).is_err());
    }

    #[test]
    fn arun_minimum_is_global() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let gt = rz90();
        let noise = Normal::new(0.0, 0.01).unwrap();
        let p: Vec<Vec3> = (0..8)
            .map(|_| Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)))
            .collect();
        let c: Vec<Vec3> = p
            .iter()
            .map(|x| gt.apply(x) + Vec3::from_fn(|_, _| noise.sample(&mut rng)))
            .collect();
        let pose = arun_fit(&p, &c).unwrap();
        let best = fit_loss(&p, &c, &pose);
        for _ in 0..100 {
            let axis = Vec3::new(rng.random(), rng.random(), rng.random()) - Vec3::repeat(0.5);
            let delta = RigidPose::from_axis_angle(
                axis,
                rng.random_range(1e-6..0.05),
                Vec3::from_fn(|_, _| rng.random_range(-1e-3..1e-3)),
            );
            let perturbed = delta.compose(&pose);
            assert!(fit_loss(&p, &c, &perturbed) >= best - 1e-12);
        }
    }

    #[test]
    fn arun_is_left_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p: Vec<Vec3> = (0..8)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let c: Vec<Vec3> = p.iter().map(|x| rz90().apply(x) + Vec3::new(0.001, 0.0, -0.002) * x.x).collect();
        let base = arun_fit(&p, &c).unwrap();
        let q = RigidPose::from_axis_angle(Vec3::new(1.0, -1.0, 0.3), 0.7, Vec3::new(0.5, 0.0, 2.0));
        let qc: Vec<Vec3> = c.iter().map(|x| q.apply(x)).collect();
        let moved = arun_fit(&p, &qc).unwrap();
        let expected = q.compose(&base);
        assert!((moved.rotation - expected.rotation).amax() < 1e-9);
        assert!((moved.translation - expected.translation).amax() < 1e-9);
    }

    fn exact_scene(n_points: usize) -> (PointCloud, OffsetPrediction, KeypointSet, RigidPose) {
        let kp = KeypointSet {
            points: vec![
                Vec3::new(0.05, 0.0, 0.0),
                Vec3::new(0.0, 0.05, 0.0),
                Vec3::new(0.0, 0.0, 0.05),
                Vec3::new(-0.05, -0.05, 0.0),
            ],
            includes_center: false,
        };
        let gt = RigidPose::from_axis_angle(Vec3::new(0.2, 1.0, -0.4), 1.1, Vec3::new(0.02, -0.03, 0.6));
        let cam: Vec<Vec3> = kp.points.iter().map(|p| gt.apply(p)).collect();
        let points: Vec<Vec3> = (0..n_points)
            .map(|i| gt.translation + Vec3::new(0.001 * i as f64, -0.0005 * i as f64, 0.0))
            .collect();
        let mut offsets = Vec::new();
        for p in &points {
            offsets.extend(cam.iter().map(|c| c - p));
        }
        let preds = OffsetPrediction::new(kp.len(), offsets, vec![1; n_points], None).unwrap();
        (PointCloud::from_points(points), preds, kp, gt)
    }

    #[test]
    fn exact_offsets_give_exact_pose() {
        for n in [1, 7, 60] {
            let (cloud, preds, kp, gt) = exact_scene(n);
            let (pose, voted) = estimate_pose(&cloud, &preds, &kp, 1, &MeanShiftParams::new(0.005)).unwrap();
            assert!(pose.rotation_error(&gt) < 1e-6);
            assert!(pose.translation_error(&gt) < 1e-9);
            assert!(voted.support_counts.iter().all(|&s| s == n));
        }
    }

    #[test]
    fn cast_votes_filters_by_label() {
        let (cloud, mut preds, _, _) = exact_scene(10);
        for i in 0..4 {
            preds.labels[i] = 0;
        }
        let sets = cast_votes(&cloud, &preds, 1).unwrap();
        assert!(sets.iter().all(|s| s.votes.len() == 6));
        assert!(matches!(cast_votes(&cloud, &preds, 9), Err(Error::ObjectNotFound(9))));
        let short = PointCloud::from_points(cloud.points[..3].to_vec());
        assert!(cast_votes(&short, &preds, 1).is_err());
    }

    #[test]
    fn nan_offsets_surface_as_missing_keypoints() {
        let (cloud, mut preds, kp, _) = exact_scene(5);
        for i in 0..5 {
            preds.offsets_of_mut(i)[2] = Vec3::repeat(f64::NAN);
        }
        let err = estimate_pose(&cloud, &preds, &kp, 1, &MeanShiftParams::new(0.01)).unwrap_err();
        assert!(matches!(err, Error::MissingVotes(ref v) if v == &vec![2]));
    }

    #[test]
    fn vote_noise_statistics() {
        let sigma = 0.002;
        let n = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let normal = Normal::new(0.0, sigma).unwrap();
        let kp = Vec3::new(0.0, 0.0, 0.5);
        let points: Vec<Vec3> = (0..n).map(|i| Vec3::new(i as f64 * 1e-5, 0.0, 0.5)).collect();
        let offsets: Vec<Vec3> = points
            .iter()
            .map(|p| kp - p + Vec3::from_fn(|_, _| normal.sample(&mut rng)))
            .collect();
        let preds = OffsetPrediction::new(1, offsets, vec![3; n], None).unwrap();
        let sets = cast_votes(&PointCloud::from_points(points), &preds, 3).unwrap();
        let votes = &sets[0].votes;
        let mean: Vec3 = votes.iter().sum::<Vec3>() / n as f64;
        for axis in 0..3 {
            let var = votes.iter().map(|v| (v[axis] - mean[axis]).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!((var.sqrt() - sigma).abs() < 0.1 * sigma);
        }
    }

    #[test]
    fn prediction_validation() {
        assert!(OffsetPrediction::new(2, vec![Vec3::zeros(); 3], vec![1, 1], None).is_err());
        assert!(OffsetPrediction::new(1, vec![Vec3::zeros(); 2], vec![1, 1], Some(vec![0.5, 1.5])).is_err());
        assert!(OffsetPrediction::new(0, vec![], vec![], None).is_err());
    }
}
