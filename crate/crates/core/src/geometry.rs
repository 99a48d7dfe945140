//! Camera model, rigid transforms and depth lifting.
//!
//! Frames: the camera looks down +z with x to the right and y down. An integer
//! pixel `(u, v)` samples the ray `((u - cx) / fx, (v - cy) / fy, 1)`, i.e. no
//! half-pixel offset is applied.

use nalgebra::{Matrix3, Vector3};
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance for the orthonormality and determinant checks on [`RigidPose`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Pinhole intrinsics plus the raw-to-meter depth factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32, depth_scale: f64) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            depth_scale,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy, self.depth_scale]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("intrinsics must be finite"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::invalid(format!("focal lengths must be positive (fx={}, fy={})", self.fx, self.fy)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image size must be non-zero"));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(Error::invalid(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        if self.depth_scale <= 0.0 {
            return Err(Error::invalid("depth_scale must be positive"));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Back-projects pixel `(u, v)` at metric depth `z`.
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Vec3 {
        Vec3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Ray direction through pixel `(u, v)`, normalized to unit z.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}

/// Row-major raw depth grid. A raw value of 0 marks a missing measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    data: Vec<u16>,
    intrinsics: CameraIntrinsics,
}

impl DepthImage {
    pub fn new(data: Vec<u16>, intrinsics: CameraIntrinsics) -> Result<Self> {
        intrinsics.validate()?;
        if data.len() != intrinsics.pixel_count() {
            return Err(Error::invalid(format!(
                "depth grid has {} values, intrinsics describe {}x{}",
                data.len(),
                intrinsics.width,
                intrinsics.height
            )));
        }
        Ok(Self { data, intrinsics })
    }

    pub fn zeros(intrinsics: CameraIntrinsics) -> Result<Self> {
        Self::new(vec![0; intrinsics.pixel_count()], intrinsics)
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u16> {
        self.data
    }

    #[inline]
    pub fn index(&self, u: u32, v: u32) -> usize {
        v as usize * self.intrinsics.width as usize + u as usize
    }

    #[inline]
    pub fn raw(&self, u: u32, v: u32) -> u16 {
        self.data[self.index(u, v)]
    }

    /// Depth in meters, `None` for missing pixels.
    #[inline]
    pub fn meters(&self, u: u32, v: u32) -> Option<f64> {
        match self.raw(u, v) {
            0 => None,
            d => Some(d as f64 * self.intrinsics.depth_scale),
        }
    }

    /// Lifted camera-frame point of a valid pixel.
    #[inline]
    pub fn point(&self, u: u32, v: u32) -> Option<Vec3> {
        self.meters(u, v)
            .map(|z| self.intrinsics.unproject(u as f64, v as f64, z))
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d != 0).count()
    }
}

/// Rotation in SO(3) plus translation in meters, mapping object to camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidPose {
    /// Builds a pose, rejecting rotations that are not orthonormal with det +1.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let pose = Self {
            rotation,
            translation,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: t,
        }
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Self {
        let axis = nalgebra::Unit::new_normalize(axis);
        let rotation = *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix();
        Self {
            rotation,
            translation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rotation.iter().chain(self.translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::invalid("pose has non-finite entries"));
        }
        let gram = self.rotation.transpose() * self.rotation - Mat3::identity();
        if gram.amax() > ROTATION_TOLERANCE {
            return Err(Error::invalid(format!("rotation is not orthonormal (|RᵀR - I|max = {:e})", gram.amax())));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::invalid(format!("rotation determinant is {det}, expected +1")));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidPose {
        let rt = self.rotation.transpose();
        RigidPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Geodesic angle between the two rotations, in radians.
    ///
    /// Uses `atan2(sin, cos)` of the relative rotation so that angles well
    /// below `sqrt(f64::EPSILON)` are still resolved.
    pub fn rotation_error(&self, other: &RigidPose) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        let cos = (rel.trace() - 1.0) * 0.5;
        let skew = Vec3::new(rel[(2, 1)] - rel[(1, 2)], rel[(0, 2)] - rel[(2, 0)], rel[(1, 0)] - rel[(0, 1)]);
        let sin = 0.5 * skew.norm();
        sin.atan2(cos)
    }

    pub fn translation_error(&self, other: &RigidPose) -> f64 {
        (self.translation - other.translation).norm()
    }
}

impl Default for RigidPose {
    fn default() -> Self {
        Self::identity()
    }
}

/// Camera-frame points with optional per-point pixel origins and labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub source_pixels: Option<Vec<(u32, u32)>>,
    pub labels: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Vec3>) -> Self {
        Self {
            points,
            source_pixels: None,
            labels: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks that parallel lists agree in length and all points are finite.
    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if self.source_pixels.as_ref().is_some_and(|s| s.len() != n) {
            return Err(Error::invalid("source_pixels length differs from point count"));
        }
        if self.labels.as_ref().is_some_and(|l| l.len() != n) {
            return Err(Error::invalid("labels length differs from point count"));
        }
        if self.points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid("point cloud contains non-finite coordinates"));
        }
        Ok(())
    }

    /// New cloud made of the points at `indices` (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            source_pixels: self
                .source_pixels
                .as_ref()
                .map(|s| indices.iter().map(|&i| s[i]).collect()),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }
}

/// Object model: vertices in the object frame and triangular faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    diameter: f64,
}

impl TriangleMesh {
    /// Validates face indices and computes the diameter by exhaustive search.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Empty("mesh has no vertices".into()));
        }
        if vertices.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid("mesh has non-finite vertices"));
        }
        if let Some(bad) = faces.iter().flatten().find(|&&i| i >= vertices.len()) {
            return Err(Error::invalid(format!(
                "face index {bad} out of range for {} vertices",
                vertices.len()
            )));
        }
        let diameter = max_pairwise_distance(&vertices);
        if diameter <= 0.0 {
            return Err(Error::Degenerate("mesh diameter is zero".into()));
        }
        Ok(Self {
            vertices,
            faces,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn centroid(&self) -> Vec3 {
        centroid(&self.vertices)
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices[1..] {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}

pub fn max_pairwise_distance(points: &[Vec3]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((a - b).norm_squared());
        }
    }
    best.sqrt()
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    let sum: Vec3 = points.iter().sum();
    sum / points.len() as f64
}

/// Lifts every valid pixel to a camera-frame point, in row-major order.
pub fn lift_depth_to_points(depth: &DepthImage) -> PointCloud {
    let k = depth.intrinsics();
    let mut points = Vec::with_capacity(depth.valid_count());
    let mut pixels = Vec::with_capacity(points.capacity());
    for v in 0..k.height {
        for u in 0..k.width {
            if let Some(p) = depth.point(u, v) {
                points.push(p);
                pixels.push((u, v));
            }
        }
    }
    PointCloud {
        points,
        source_pixels: Some(pixels),
        labels: None,
    }
}

/// Projects a camera-frame point to continuous pixel coordinates.
pub fn project_point(p: &Vec3, k: &CameraIntrinsics) -> Result<(f64, f64)> {
    if !(p.z > 0.0) {
        return Err(Error::Domain(format!("cannot project point with z = {}", p.z)));
    }
    Ok((k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy))
}

pub fn transform_points(points: &[Vec3], pose: &RigidPose) -> Vec<Vec3> {
    points.iter().map(|p| pose.apply(p)).collect()
}

/// Resamples a cloud to exactly `n` points.
///
/// With at least `n` input points this is seeded sampling without
/// replacement. Smaller clouds keep every input point and are topped up by
/// seeded draws with replacement.
pub fn subsample_points(cloud: &PointCloud, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::invalid("subsample count must be positive"));
    }
    if cloud.is_empty() {
        return Err(Error::Empty("cannot subsample an empty cloud".into()));
    }
    let mut rng = rng::stream(seed, rng::STREAM_SUBSAMPLE);
    let len = cloud.len();
    let indices: Vec<usize> = if len >= n {
        index::sample(&mut rng, len, n).into_vec()
    } else {
        (0..len)
            .chain((len..n).map(|_| rng.random_range(0..len)))
            .collect()
    };
    Ok(cloud.select(&indices))
}
