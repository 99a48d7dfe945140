//! Depth-only 6DoF object pose pipeline.
//!
//! Depth images are lifted to camera-frame point clouds, turned into
//! normal-vector-angles images, and fed (here through an oracle predictor)
//! to per-point keypoint offset voting. Mean shift picks each keypoint, a
//! closed-form least-squares fit recovers the pose, and ADD/ADD-S score it.
//!
//! ```
//! use depthpose::prelude::*;
//!
//! let mesh = depthpose::meshes::l_bracket(0.12, 0.08, 0.03, 0.04);
//! let keypoints = select_keypoints(&mesh, 8, true).unwrap();
//! let camera = depthpose::config::default_camera();
//! let gt = random_pose(7, &camera, mesh.diameter());
//! let params = E2eParams {
//!     mesh_id: "l_bracket".into(),
//!     intrinsics: camera,
//!     oracle: OracleConfig::default(),
//!     bandwidth: 0.05 * mesh.diameter(),
//!     symmetric: false,
//!     max_points: None,
//! };
//! let out = run_e2e(&mesh, &gt, &keypoints, &params).unwrap();
//! assert!(out.report.add < 1e-6 * mesh.diameter());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod keypoints;
pub mod meshes;
pub mod metrics;
pub mod normals;
pub mod rng;
pub mod spatial;
pub mod synth;
pub mod trials;
pub mod voting;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::geometry::{
        lift_depth_to_points, project_point, subsample_points, transform_points, CameraIntrinsics, DepthImage,
        PointCloud, RigidPose, TriangleMesh, Vec3,
    };
    pub use crate::keypoints::{farthest_point_sampling, select_keypoints, KeypointSet};
    pub use crate::metrics::{
        accuracy_at_threshold, add_metric, adds_metric, evaluate_pose, focal_loss, joint_loss, l1_offset_loss,
        PoseErrorReport,
    };
    pub use crate::normals::{compute_normals, generate_angle_image, AngleImage, NormalMap};
    pub use crate::synth::{oracle_predict, random_pose, render_depth, run_e2e, E2eParams, OracleConfig, SyntheticScene};
    pub use crate::voting::{arun_fit, cast_votes, estimate_pose, mean_shift, MeanShiftParams, OffsetPrediction};
}
