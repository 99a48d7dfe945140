//! Run configuration: one JSON file, every field optional, CLI flags on top.
//!
//! Precedence: built-in defaults < config file < command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, TriangleMesh};
use crate::keypoints::DEFAULT_KEYPOINT_COUNT;
use crate::synth::OracleConfig;
use crate::voting::DEFAULT_BANDWIDTH_REL;

pub const DEFAULT_POINT_COUNT: usize = 12288;

/// Oracle settings with noise expressed relative to the object diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSettings {
    pub noise_sigma_rel: f64,
    pub label_flip_rate: f64,
    pub occlusion_fraction: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            noise_sigma_rel: 0.0,
            label_flip_rate: 0.0,
            occlusion_fraction: 0.0,
        }
    }
}

impl OracleSettings {
    pub fn to_config(&self, diameter: f64, seed: u64) -> OracleConfig {
        OracleConfig {
            offset_noise_sigma: self.noise_sigma_rel * diameter,
            label_flip_rate: self.label_flip_rate,
            occlusion_fraction: self.occlusion_fraction,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub object_id: String,
    /// `builtin:<name>` or a path to an ASCII PLY mesh.
    pub mesh: Option<String>,
    pub intrinsics: Option<PathBuf>,
    /// Inline camera, used when `intrinsics` is not set.
    pub camera: Option<CameraIntrinsics>,
    pub n_keypoints: usize,
    pub add_center: bool,
    pub bandwidth_rel: f64,
    pub n_points: usize,
    pub symmetric: bool,
    pub use_adds_for_symmetric: bool,
    /// Label of the object in predictions.
    pub target_label: u32,
    pub seed: u64,
    pub oracle: OracleSettings,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            object_id: "object".into(),
            mesh: None,
            intrinsics: None,
            camera: None,
            n_keypoints: DEFAULT_KEYPOINT_COUNT,
            add_center: true,
            bandwidth_rel: DEFAULT_BANDWIDTH_REL,
            n_points: DEFAULT_POINT_COUNT,
            symmetric: false,
            use_adds_for_symmetric: true,
            target_label: crate::synth::OBJECT_LABEL,
            seed: 0,
            oracle: OracleSettings::default(),
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = crate::io::read_json(path)?;
        cfg.validate().map_err(|e| Error::parse(path, e))?;
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_keypoints == 0 {
            return Err(Error::invalid("n_keypoints must be positive"));
        }
        if !(self.bandwidth_rel > 0.0) {
            return Err(Error::invalid("bandwidth_rel must be positive"));
        }
        if self.n_points == 0 {
            return Err(Error::invalid("n_points must be positive"));
        }
        self.oracle.to_config(1.0, 0).validate()?;
        if let Some(k) = &self.camera {
            k.validate()?;
        }
        Ok(())
    }

    /// Configured mesh; falls back to a builtin named like `object_id`.
    pub fn load_mesh(&self) -> Result<TriangleMesh> {
        match &self.mesh {
            Some(source) => crate::io::load_mesh(source),
            None => crate::meshes::builtin(&self.object_id).ok_or_else(|| {
                Error::invalid(format!(
                    "no mesh configured and '{}' is not a builtin mesh",
                    self.object_id
                ))
            }),
        }
    }

    pub fn load_camera(&self) -> Result<CameraIntrinsics> {
        match (&self.intrinsics, &self.camera) {
            (Some(p), _) => crate::io::read_intrinsics(p),
            (None, Some(k)) => Ok(*k),
            (None, None) => Ok(default_camera()),
        }
    }

    pub fn bandwidth(&self, diameter: f64) -> f64 {
        self.bandwidth_rel * diameter
    }
}

/// 160x120 pinhole (a quarter-resolution LineMod-like camera), millimeter depth.
pub fn default_camera() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 143.0,
        fy: 143.0,
        cx: 80.0,
        cy: 60.0,
        width: 160,
        height: 120,
        depth_scale: 0.001,
    }
}
