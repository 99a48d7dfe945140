//! Per-pixel surface normals and the normal-vector-angles image.
//!
//! Normals come from central differences of lifted neighbors on the organized
//! depth grid and are oriented towards the camera. The angle image stores, per
//! pixel, the angles between the normal and the camera X/Y/Z axes, mapped
//! linearly from `[0, π]` onto `[0, 255]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{DepthImage, Vec3};

/// Neighbor depths farther than this fraction from the center depth mark the
/// pixel as lying on a discontinuity.
pub const DISCONTINUITY_RATIO: f64 = 0.02;

/// Largest accepted deviation of `|N|` from 1 in [`generate_angle_image`].
pub const UNIT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub width: u32,
    pub height: u32,
    /// Row-major; entries of invalid pixels are zero.
    pub normals: Vec<Vec3>,
    pub valid: Vec<bool>,
}

impl NormalMap {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn get(&self, u: u32, v: u32) -> Option<Vec3> {
        let i = v as usize * self.width as usize + u as usize;
        self.valid[i].then(|| self.normals[i])
    }
}

/// 3-channel 8-bit angle image with an explicit validity mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleImage {
    pub width: u32,
    pub height: u32,
    pub channels: Vec<[u8; 3]>,
    pub valid: Vec<bool>,
}

impl AngleImage {
    pub fn get(&self, u: u32, v: u32) -> [u8; 3] {
        self.channels[v as usize * self.width as usize + u as usize]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

pub fn compute_normals(depth: &DepthImage) -> NormalMap {
    let (w, h) = (depth.width(), depth.height());
    let mut normals = vec![Vec3::zeros(); w as usize * h as usize];
    let mut valid = vec![false; normals.len()];
    for v in 1..h.saturating_sub(1) {
        for u in 1..w.saturating_sub(1) {
            if let Some(n) = normal_at(depth, u, v) {
                let i = depth.index(u, v);
                normals[i] = n;
                valid[i] = true;
            }
        }
    }
    NormalMap {
        width: w,
        height: h,
        normals,
        valid,
    }
}

fn normal_at(depth: &DepthImage, u: u32, v: u32) -> Option<Vec3> {
    let zc = depth.meters(u, v)?;
    let limit = DISCONTINUITY_RATIO * zc;
    let neighbor = |uu: u32, vv: u32| -> Option<Vec3> {
        let z = depth.meters(uu, vv)?;
        ((z - zc).abs() <= limit).then(|| depth.intrinsics().unproject(uu as f64, vv as f64, z))
    };
    let right = neighbor(u + 1, v)?;
    let left = neighbor(u - 1, v)?;
    let down = neighbor(u, v + 1)?;
    let up = neighbor(u, v - 1)?;
    let n = (right - left).cross(&(down - up));
    let len = n.norm();
    if !(len > 0.0) || !len.is_finite() {
        return None;
    }
    let n = n / len;
    let center = depth.intrinsics().unproject(u as f64, v as f64, zc);
    Some(if n.dot(&center) > 0.0 { -n } else { n })
}

/// Angles between a unit normal and the camera X, Y and Z axes, each in `[0, π]`.
#[inline]
pub fn axis_angles(n: &Vec3) -> [f64; 3] {
    [n.x, n.y, n.z].map(|c| c.clamp(-1.0, 1.0).acos())
}

/// Maps an angle in `[0, π]` to an 8-bit level, rounding half away from zero.
#[inline]
pub fn quantize_angle(angle: f64) -> u8 {
    (angle / PI * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn generate_angle_image(normals: &NormalMap) -> Result<AngleImage> {
    let mut channels = vec![[0u8; 3]; normals.normals.len()];
    for (i, (n, _)) in normals
        .normals
        .iter()
        .zip(&normals.valid)
        .enumerate()
        .filter(|(_, (_, &ok))| ok)
    {
        let len = n.norm();
        if !((len - 1.0).abs() <= UNIT_TOLERANCE) {
            return Err(Error::invalid(format!(
                "normal at pixel {} has length {len}, expected unit",
                i
            )));
        }
        channels[i] = axis_angles(n).map(quantize_angle);
    }
    Ok(AngleImage {
        width: normals.width,
        height: normals.height,
        channels,
        valid: normals.valid.clone(),
    })
}

/// Normals followed by the angle image, straight from depth.
pub fn angle_image_from_depth(depth: &DepthImage) -> Result<AngleImage> {
    generate_angle_image(&compute_normals(depth))
}
