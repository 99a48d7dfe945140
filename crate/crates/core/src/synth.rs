//! Synthetic scenes and the oracle predictor.
//!
//! Scenes are ray-cast depth renders of a single mesh under a known pose. The
//! oracle stands in for a trained network: it emits ground-truth keypoint
//! offsets with Gaussian noise, random label flips and a seeded occlusion
//! window, all driven by explicit seeds.

use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    lift_depth_to_points, subsample_points, CameraIntrinsics, DepthImage, PointCloud, RigidPose, TriangleMesh, Vec3,
};
use crate::keypoints::KeypointSet;
use crate::metrics::{evaluate_pose, PoseErrorReport};
use crate::normals::{angle_image_from_depth, AngleImage};
use crate::rng;
use crate::voting::{estimate_pose, MeanShiftParams, OffsetPrediction, VotedKeypoints};

pub const BACKGROUND_LABEL: u32 = 0;
pub const OBJECT_LABEL: u32 = 1;

/// Depth render plus the per-pixel hit mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Render {
    pub depth: DepthImage,
    pub mask: Vec<bool>,
}

impl Render {
    pub fn hit_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub depth: DepthImage,
    pub gt_pose: RigidPose,
    pub gt_mask: Vec<bool>,
    pub gt_keypoints_cam: Vec<Vec3>,
    pub mesh_id: String,
    pub seed: u64,
}

impl SyntheticScene {
    /// Renders `mesh` under `pose` and attaches the camera-frame keypoints.
    pub fn render(
        mesh_id: &str,
        mesh: &TriangleMesh,
        pose: &RigidPose,
        k: &CameraIntrinsics,
        keypoints: &KeypointSet,
        seed: u64,
    ) -> Result<Self> {
        let Render { depth, mask } = render_depth(mesh, pose, k)?;
        Ok(Self {
            depth,
            gt_pose: *pose,
            gt_mask: mask,
            gt_keypoints_cam: keypoints.points.iter().map(|p| pose.apply(p)).collect(),
            mesh_id: mesh_id.to_string(),
            seed,
        })
    }

    pub fn object_pixel_count(&self) -> usize {
        self.gt_mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Triangle {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
}

impl Triangle {
    /// Möller-Trumbore against a ray from the camera origin; returns the ray
    /// parameter, which equals the hit depth because `dir.z == 1`.
    #[inline]
    fn intersect(&self, dir: &Vec3) -> Option<f64> {
        let pvec = dir.cross(&self.e2);
        let det = self.e1.dot(&pvec);
        if det.abs() < 1e-300 {
            return None;
        }
        let inv = 1.0 / det;
        let tvec = -self.v0;
        let u = tvec.dot(&pvec) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let qvec = tvec.cross(&self.e1);
        let v = dir.dot(&qvec) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = self.e2.dot(&qvec) * inv;
        (t > 0.0).then_some(t)
    }
}

fn camera_triangles(mesh: &TriangleMesh, pose: &RigidPose) -> Vec<[Vec3; 3]> {
    let verts: Vec<Vec3> = mesh.vertices().iter().map(|v| pose.apply(v)).collect();
    mesh.faces()
        .iter()
        .map(|f| [verts[f[0]], verts[f[1]], verts[f[2]]])
        .collect()
}

fn quantize_depth(z: f64, k: &CameraIntrinsics) -> Result<u16> {
    let raw = (z / k.depth_scale).round();
    if raw < 1.0 || raw > u16::MAX as f64 {
        return Err(Error::Domain(format!(
            "rendered depth {z} m does not fit 16-bit raw units at scale {}",
            k.depth_scale
        )));
    }
    Ok(raw as u16)
}

fn finish_render(nearest: Vec<f64>, k: &CameraIntrinsics) -> Result<Render> {
    let mut data = vec![0u16; nearest.len()];
    let mut mask = vec![false; nearest.len()];
    for (i, &z) in nearest.iter().enumerate() {
        if z.is_finite() {
            data[i] = quantize_depth(z, k)?;
            mask[i] = true;
        }
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::NotVisible("rendered object covers no pixels".into()));
    }
    Ok(Render {
        depth: DepthImage::new(data, *k)?,
        mask,
    })
}

/// Ray-casts every pixel center against every transformed triangle and keeps
/// the nearest hit in front of the camera.
///
/// Triangles entirely in front of the camera are only tested against pixels
/// inside their projected bounding box (plus one pixel); the nearest hit per
/// pixel is the same as [`render_depth_brute_force`].
pub fn render_depth(mesh: &TriangleMesh, pose: &RigidPose, k: &CameraIntrinsics) -> Result<Render> {
    k.validate()?;
    let (w, h) = (k.width as usize, k.height as usize);
    let mut nearest = vec![f64::INFINITY; w * h];
    for tri in camera_triangles(mesh, pose) {
        let t = Triangle {
            v0: tri[0],
            e1: tri[1] - tri[0],
            e2: tri[2] - tri[0],
        };
        let (u0, u1, v0, v1) = if tri.iter().all(|p| p.z > 0.0) {
            let (mut umin, mut umax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in &tri {
                let u = k.fx * p.x / p.z + k.cx;
                let v = k.fy * p.y / p.z + k.cy;
                umin = umin.min(u);
                umax = umax.max(u);
                vmin = vmin.min(v);
                vmax = vmax.max(v);
            }
            let clamp_lo = |x: f64, n: usize| (x.floor() - 1.0).clamp(0.0, n as f64) as usize;
            let clamp_hi = |x: f64, n: usize| (x.ceil() + 2.0).clamp(0.0, n as f64) as usize;
            (clamp_lo(umin, w), clamp_hi(umax, w), clamp_lo(vmin, h), clamp_hi(vmax, h))
        } else if tri.iter().all(|p| p.z <= 0.0) {
            continue;
        } else {
            (0, w, 0, h)
        };
        for v in v0..v1 {
            for u in u0..u1 {
                let dir = k.ray(u as f64, v as f64);
                if let Some(z) = t.intersect(&dir) {
                    let cell = &mut nearest[v * w + u];
                    if z < *cell {
                        *cell = z;
                    }
                }
            }
        }
    }
    finish_render(nearest, k)
}

/// Reference renderer: every pixel against every triangle, no culling.
pub fn render_depth_brute_force(mesh: &TriangleMesh, pose: &RigidPose, k: &CameraIntrinsics) -> Result<Render> {
    k.validate()?;
    let tris: Vec<Triangle> = camera_triangles(mesh, pose)
        .into_iter()
        .map(|t| Triangle {
            v0: t[0],
            e1: t[1] - t[0],
            e2: t[2] - t[0],
        })
        .collect();
    let mut nearest = vec![f64::INFINITY; k.pixel_count()];
    for v in 0..k.height {
        for u in 0..k.width {
            let dir = k.ray(u as f64, v as f64);
            let cell = &mut nearest[v as usize * k.width as usize + u as usize];
            for t in &tris {
                if let Some(z) = t.intersect(&dir) {
                    *cell = cell.min(z);
                }
            }
        }
    }
    finish_render(nearest, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Per-component standard deviation of the offset noise, meters.
    pub offset_noise_sigma: f64,
    pub label_flip_rate: f64,
    /// Fraction of object pixels hidden by the occlusion window, in `[0, 1)`.
    pub occlusion_fraction: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            offset_noise_sigma: 0.0,
            label_flip_rate: 0.0,
            occlusion_fraction: 0.0,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.offset_noise_sigma >= 0.0) || !self.offset_noise_sigma.is_finite() {
            return Err(Error::invalid("offset_noise_sigma must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.label_flip_rate) {
            return Err(Error::invalid("label_flip_rate must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.occlusion_fraction) {
            return Err(Error::invalid("occlusion_fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Hides `fraction` of the masked pixels with a window anchored at a seeded
/// side of the object (left, right, top or bottom).
///
/// Pixels are removed in sweep order from that side: whole columns (or rows)
/// first, the last one partially, so exactly `round(fraction · count)` pixels
/// disappear. The side depends only on `seed`, so for a fixed seed the hidden
/// set grows monotonically with `fraction`.
pub fn occlusion_mask(mask: &[bool], width: u32, fraction: f64, seed: u64) -> Vec<bool> {
    let mut out = mask.to_vec();
    let mut pixels: Vec<(u32, u32)> = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| ((i % width as usize) as u32, (i / width as usize) as u32))
        .collect();
    let remove = (fraction * pixels.len() as f64).round() as usize;
    if remove == 0 {
        return out;
    }
    let side: u32 = rng::stream(seed, rng::STREAM_OCCLUSION).random_range(0..4);
    let key = |&(u, v): &(u32, u32)| -> (i64, i64) {
        match side {
            0 => (u as i64, v as i64),
            1 => (-(u as i64), v as i64),
            2 => (v as i64, u as i64),
            _ => (-(v as i64), u as i64),
        }
    };
    pixels.sort_by_key(key);
    for &(u, v) in &pixels[..remove.min(pixels.len())] {
        out[v as usize * width as usize + u as usize] = false;
    }
    out
}

/// Lifted scene cloud with oracle predictions, aligned point for point.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    pub cloud: PointCloud,
    pub predictions: OffsetPrediction,
    /// Object pixels left after occlusion.
    pub visible_mask: Vec<bool>,
}

/// Applies the occlusion window and lifts what remains. Background pixels
/// (valid depth outside the mask) keep their depth and get the background label.
pub fn visible_cloud(scene: &SyntheticScene, cfg: &OracleConfig) -> Result<(PointCloud, Vec<bool>)> {
    cfg.validate()?;
    let width = scene.depth.width();
    let visible = occlusion_mask(&scene.gt_mask, width, cfg.occlusion_fraction, cfg.seed);
    if !visible.iter().any(|&m| m) {
        return Err(Error::NotVisible("occlusion removed every object pixel".into()));
    }
    let mut depth = scene.depth.clone();
    for (i, (&was, &is)) in scene.gt_mask.iter().zip(&visible).enumerate() {
        if was && !is {
            depth.data_mut()[i] = 0;
        }
    }
    let mut cloud = lift_depth_to_points(&depth);
    let labels = cloud
        .source_pixels
        .as_ref()
        .expect("lifting records pixels")
        .iter()
        .map(|&(u, v)| {
            if visible[v as usize * width as usize + u as usize] {
                OBJECT_LABEL
            } else {
                BACKGROUND_LABEL
            }
        })
        .collect();
    cloud.labels = Some(labels);
    Ok((cloud, visible))
}

/// Ground-truth offsets `keypoint - point` plus noise, with label flips.
///
/// Noise is drawn point by point, keypoint by keypoint, x/y/z; flips are drawn
/// once per object point from a separate stream.
pub fn predict_offsets(cloud: &PointCloud, keypoints_cam: &[Vec3], cfg: &OracleConfig) -> Result<OffsetPrediction> {
    cfg.validate()?;
    let gt_labels = cloud
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid("oracle needs a labelled cloud"))?;
    let mut noise_rng = rng::stream(cfg.seed, rng::STREAM_OFFSET_NOISE);
    let mut flip_rng = rng::stream(cfg.seed, rng::STREAM_LABEL_FLIP);
    let sigma = cfg.offset_noise_sigma;
    let mut offsets = Vec::with_capacity(cloud.len() * keypoints_cam.len());
    for p in &cloud.points {
        for kp in keypoints_cam {
            let mut o = kp - p;
            if sigma > 0.0 {
                let n: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut noise_rng));
                o += sigma * Vec3::new(n[0], n[1], n[2]);
            }
            offsets.push(o);
        }
    }
    let labels = gt_labels
        .iter()
        .map(|&l| {
            if l == OBJECT_LABEL && cfg.label_flip_rate > 0.0 && flip_rng.random::<f64>() < cfg.label_flip_rate {
                BACKGROUND_LABEL
            } else {
                l
            }
        })
        .collect();
    OffsetPrediction::new(keypoints_cam.len(), offsets, labels, None)
}

pub fn oracle_predict(scene: &SyntheticScene, cfg: &OracleConfig) -> Result<OracleOutput> {
    let (cloud, visible_mask) = visible_cloud(scene, cfg)?;
    let predictions = predict_offsets(&cloud, &scene.gt_keypoints_cam, cfg)?;
    Ok(OracleOutput {
        cloud,
        predictions,
        visible_mask,
    })
}

/// Uniformly random rotation with the object placed in front of the camera
/// so that its diameter spans about a third of the image width.
pub fn random_pose(seed: u64, k: &CameraIntrinsics, diameter: f64) -> RigidPose {
    let mut rng = rng::stream(seed, rng::STREAM_POSE);
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
    let quat = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
    let z = k.fx * diameter / (0.33 * k.width as f64);
    let lateral = Normal::new(0.0, 0.05).expect("valid");
    let du = (lateral.sample(&mut rng) as f64).clamp(-0.15, 0.15) * k.width as f64;
    let dv = (lateral.sample(&mut rng) as f64).clamp(-0.15, 0.15) * k.height as f64;
    let t = k.unproject(k.cx + du, k.cy + dv, z);
    RigidPose {
        rotation: *quat.to_rotation_matrix().matrix(),
        translation: t,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2eParams {
    pub mesh_id: String,
    pub intrinsics: CameraIntrinsics,
    pub oracle: OracleConfig,
    pub bandwidth: f64,
    pub symmetric: bool,
    /// Caps the lifted cloud by seeded subsampling; smaller clouds are left as is.
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct E2eOutcome {
    pub report: PoseErrorReport,
    pub pose: RigidPose,
    pub voted: VotedKeypoints,
    pub angle_image: AngleImage,
    pub scene: SyntheticScene,
    pub visible_points: usize,
}

/// Render, angle image, oracle prediction, voting and fit, then ADD/ADD-S.
pub fn run_e2e(mesh: &TriangleMesh, gt_pose: &RigidPose, keypoints: &KeypointSet, params: &E2eParams) -> Result<E2eOutcome> {
    let t0 = Instant::now();
    let scene = SyntheticScene::render(&params.mesh_id, mesh, gt_pose, &params.intrinsics, keypoints, params.oracle.seed)?;
    let angle_image = angle_image_from_depth(&scene.depth)?;
    let t_render = t0.elapsed();

    let (mut cloud, _) = visible_cloud(&scene, &params.oracle)?;
    if let Some(cap) = params.max_points {
        if cloud.len() > cap {
            cloud = subsample_points(&cloud, cap, params.oracle.seed)?;
        }
    }
    let predictions = predict_offsets(&cloud, &scene.gt_keypoints_cam, &params.oracle)?;
    let t_predict = t0.elapsed();

    let ms = MeanShiftParams::new(params.bandwidth).with_seed(params.oracle.seed);
    let (pose, voted) = estimate_pose(&cloud, &predictions, keypoints, OBJECT_LABEL, &ms)?;
    let report = evaluate_pose(mesh, &pose, gt_pose, params.symmetric)?;
    log::debug!(
        "e2e mesh={} seed={} points={} render={:?} predict={:?} total={:?}",
        params.mesh_id,
        params.oracle.seed,
        cloud.len(),
        t_render,
        t_predict - t_render,
        t0.elapsed()
    );
    Ok(E2eOutcome {
        report,
        pose,
        voted,
        angle_image,
        scene,
        visible_points: cloud.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::select_keypoints;
    use crate::meshes;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(150.0, 150.0, 80.0, 60.0, 160, 120, 0.001).unwrap()
    }

    fn plane_triangle(z: f64, size: f64) -> TriangleMesh {
        TriangleMesh::new(
            vec![Vec3::new(-size, -size, z), Vec3::new(size, -size, z), Vec3::new(0.0, size, z)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_depth() {
        let r = render_depth(&plane_triangle(2.0, 0.5), &RigidPose::identity(), &k()).unwrap();
        assert_eq!(r.depth.raw(80, 60), 2000);
        assert!(r.mask[60 * 160 + 80]);
        assert_eq!(r.depth.raw(0, 0), 0);
        assert!(!r.mask[0]);
    }

    #[test]
    fn nearer_triangle_wins() {
        let near = plane_triangle(1.0, 0.2);
        let far = plane_triangle(2.0, 0.8);
        let mut verts = near.vertices().to_vec();
        verts.extend_from_slice(far.vertices());
        let both = TriangleMesh::new(verts, vec![[3, 4, 5], [0, 1, 2]]).unwrap();
        let r = render_depth(&both, &RigidPose::identity(), &k()).unwrap();
        let only_near = render_depth(&near, &RigidPose::identity(), &k()).unwrap();
        for (i, &hit) in only_near.mask.iter().enumerate() {
            if hit {
                assert_eq!(r.depth.data()[i], 1000);
            }
        }
        assert!(r.depth.data().contains(&2000));
    }

    #[test]
    fn object_out_of_frame() {
        let behind = RigidPose::from_translation(Vec3::new(0.0, 0.0, -3.0));
        assert!(matches!(render_depth(&plane_triangle(1.0, 0.1), &behind, &k()), Err(Error::NotVisible(_))));
    }

    #[test]
    fn culled_render_matches_brute_force() {
        for (i, mesh) in [meshes::cube(0.1), meshes::icosphere(0.06, 2), meshes::l_bracket(0.12, 0.08, 0.03, 0.04)]
            .iter()
            .enumerate()
        {
            let pose = random_pose(i as u64 + 40, &k(), mesh.diameter());
            assert_eq!(
                render_depth(mesh, &pose, &k()).unwrap(),
                render_depth_brute_force(mesh, &pose, &k()).unwrap()
            );
        }
    }

    #[test]
    fn occlusion_halves_object_pixels() {
        let mesh = meshes::cube(0.1);
        let pose = random_pose(3, &k(), mesh.diameter());
        let r = render_depth(&mesh, &pose, &k()).unwrap();
        let total = r.hit_count();
        let half = occlusion_mask(&r.mask, 160, 0.5, 9);
        assert_eq!(half.iter().filter(|&&m| m).count(), total - (0.5 * total as f64).round() as usize);
        let mut last = total;
        for f in [0.0, 0.1, 0.2, 0.4, 0.6, 0.9] {
            let m = occlusion_mask(&r.mask, 160, f, 9);
            let c = m.iter().filter(|&&b| b).count();
            assert!(c <= last);
            last = c;
        }
    }

    fn scene(seed: u64) -> (TriangleMesh, KeypointSet, SyntheticScene) {
        let mesh = meshes::l_bracket(0.12, 0.08, 0.03, 0.04);
        let kp = select_keypoints(&mesh, 8, true).unwrap();
        let pose = random_pose(seed, &k(), mesh.diameter());
        let s = SyntheticScene::render("l_bracket", &mesh, &pose, &k(), &kp, seed).unwrap();
        (mesh, kp, s)
    }

    #[test]
    fn noiseless_oracle_votes_are_exact() {
        let (_, kp, s) = scene(1);
        let out = oracle_predict(&s, &OracleConfig::default()).unwrap();
        let sets = crate::voting::cast_votes(&out.cloud, &out.predictions, OBJECT_LABEL).unwrap();
        assert_eq!(sets.len(), kp.len());
        for (set, gt) in sets.iter().zip(&s.gt_keypoints_cam) {
            assert_eq!(set.votes.len(), s.object_pixel_count());
            assert!(set.votes.iter().all(|v| (v - gt).norm() < 1e-12));
        }
    }

    #[test]
    fn oracle_noise_statistics() {
        let (_, _, s) = scene(2);
        let sigma = 0.002;
        let cfg = OracleConfig {
            offset_noise_sigma: sigma,
            seed: 5,
            ..Default::default()
        };
        let (cloud, _) = visible_cloud(&s, &cfg).unwrap();
        // Repeat the visible cloud to get enough samples for the std estimate.
        let reps = 5000usize.div_ceil(cloud.len());
        let idx: Vec<usize> = (0..reps).flat_map(|_| 0..cloud.len()).collect();
        let big = cloud.select(&idx);
        assert!(big.len() >= 5000);
        let preds = predict_offsets(&big, &s.gt_keypoints_cam, &cfg).unwrap();
        let sets = crate::voting::cast_votes(&big, &preds, OBJECT_LABEL).unwrap();
        for (set, gt) in sets.iter().zip(&s.gt_keypoints_cam) {
            let n = set.votes.len() as f64;
            let var: f64 = set.votes.iter().map(|v| (v - gt).norm_squared()).sum::<f64>() / (3.0 * n);
            assert!((var.sqrt() - sigma).abs() < 0.1 * sigma, "std {}", var.sqrt());
        }
    }

    #[test]
    fn label_flips_reduce_object_points() {
        let (_, _, s) = scene(3);
        let cfg = OracleConfig {
            label_flip_rate: 0.3,
            seed: 1,
            ..Default::default()
        };
        let out = oracle_predict(&s, &cfg).unwrap();
        let kept = out.predictions.labels.iter().filter(|&&l| l == OBJECT_LABEL).count() as f64;
        let frac = kept / out.cloud.len() as f64;
        assert!((frac - 0.7).abs() < 0.08, "{frac}");
    }

    #[test]
    fn oracle_config_validation() {
        let bad = OracleConfig {
            occlusion_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let (_, _, s) = scene(4);
        assert!(oracle_predict(&s, &bad).is_err());
    }
}
