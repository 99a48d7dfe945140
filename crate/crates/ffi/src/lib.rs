//! C ABI for the depthpose library.
//!
//! Every function returns a [`DpStatus`]; on failure the message is available
//! from [`dp_last_error_message`] on the calling thread. Points cross the
//! boundary as interleaved `x, y, z` doubles. Handles are opaque and must be
//! released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use depthpose::config::OracleSettings;
use depthpose::geometry::{
    lift_depth_to_points, CameraIntrinsics, DepthImage, Mat3, PointCloud, RigidPose, TriangleMesh, Vec3,
};
use depthpose::keypoints::select_keypoints;
use depthpose::metrics::{add_metric, adds_metric};
use depthpose::normals::angle_image_from_depth;
use depthpose::synth::{run_e2e, E2eParams};
use depthpose::voting::{arun_fit, mean_shift, MeanShiftParams};
use depthpose::Error;

/// Result code of every call. Values 2 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    EmptyOrDegenerate = 3,
    PipelineFailure = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Meters per raw depth unit.
    pub depth_scale: f64,
}

/// Rigid transform `x_cam = R x_obj + T`; `rotation` is row-major.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpPose {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

/// Settings for `dp_run_e2e`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpE2eConfig {
    /// Offset noise standard deviation relative to the mesh diameter.
    pub noise_sigma_rel: f64,
    pub label_flip_rate: f64,
    pub occlusion_fraction: f64,
    pub seed: u64,
    pub n_keypoints: usize,
    pub add_center: bool,
    /// Mean shift bandwidth relative to the mesh diameter.
    pub bandwidth_rel: f64,
    pub symmetric: bool,
    /// Point cap; 0 keeps every visible point.
    pub max_points: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpE2eResult {
    pub pose: DpPose,
    pub add: f64,
    pub adds: f64,
    pub threshold: f64,
    pub visible_points: usize,
}

/// Opaque triangle mesh.
pub struct DpMesh(TriangleMesh);

/// Opaque camera-frame point cloud.
pub struct DpPointCloud(PointCloud);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DpStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            DpStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            match e.exit_code() {
                2 => DpStatus::InvalidInput,
                3 => DpStatus::EmptyOrDegenerate,
                _ => DpStatus::PipelineFailure,
            }
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DpStatus::Panic
        }
    }
}

unsafe fn ptr_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn ptr_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn points_in(p: *const f64, n: usize, what: &'static str) -> Result<Vec<Vec3>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    let flat: &[f64] = slice::from_raw_parts(p, n * 3);
    Ok(flat.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
}

unsafe fn points_out(points: &[Vec3], out: *mut f64, capacity: usize) -> Result<(), Failure> {
    if points.len() > capacity {
        return Err(Error::invalid(format!("output holds {capacity} points, {} needed", points.len())).into());
    }
    if points.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(Failure::Null("output buffer"));
    }
    let dst = slice::from_raw_parts_mut(out, points.len() * 3);
    for (d, p) in dst.chunks_exact_mut(3).zip(points) {
        d.copy_from_slice(p.as_slice());
    }
    Ok(())
}

fn intrinsics(k: &DpIntrinsics) -> Result<CameraIntrinsics, Failure> {
    Ok(CameraIntrinsics::new(k.fx, k.fy, k.cx, k.cy, k.width, k.height, k.depth_scale)?)
}

fn pose_in(p: &DpPose) -> Result<RigidPose, Failure> {
    let r = Mat3::from_row_slice(&p.rotation);
    let t = Vec3::new(p.translation[0], p.translation[1], p.translation[2]);
    Ok(RigidPose::new(r, t)?)
}

fn pose_out(p: &RigidPose) -> DpPose {
    let mut rotation = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            rotation[r * 3 + c] = p.rotation[(r, c)];
        }
    }
    DpPose {
        rotation,
        translation: [p.translation.x, p.translation.y, p.translation.z],
    }
}

unsafe fn depth_in(depth: *const u16, len: usize, k: *const DpIntrinsics) -> Result<DepthImage, Failure> {
    let k = intrinsics(ptr_ref(k, "intrinsics")?)?;
    if depth.is_null() {
        return Err(Failure::Null("depth"));
    }
    Ok(DepthImage::new(slice::from_raw_parts(depth, len).to_vec(), k)?)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a NUL-terminated string with static lifetime.
#[no_mangle]
pub extern "C" fn dp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a mesh from `n_vertices` xyz triples and `n_faces` index triples.
///
/// # Safety
/// `vertices` must hold `3 * n_vertices` doubles, `faces` `3 * n_faces`
/// indices, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_mesh_new(
    vertices: *const f64,
    n_vertices: usize,
    faces: *const u32,
    n_faces: usize,
    out: *mut *mut DpMesh,
) -> DpStatus {
    guard(|| {
        let out = ptr_mut(out, "out")?;
        let verts = points_in(vertices, n_vertices, "vertices")?;
        let faces: Vec<[usize; 3]> = if n_faces == 0 {
            Vec::new()
        } else {
            if faces.is_null() {
                return Err(Failure::Null("faces"));
            }
            slice::from_raw_parts(faces, n_faces * 3)
                .chunks_exact(3)
                .map(|f| [f[0] as usize, f[1] as usize, f[2] as usize])
                .collect()
        };
        *out = Box::into_raw(Box::new(DpMesh(TriangleMesh::new(verts, faces)?)));
        Ok(())
    })
}

/// Loads a builtin mesh (`cube`, `unit_cube`, `icosphere`, `l_bracket`,
/// `tetrahedron`) or an ASCII PLY file; the same specs as the command line.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_mesh_load(source: *const c_char, out: *mut *mut DpMesh) -> DpStatus {
    guard(|| {
        let out = ptr_mut(out, "out")?;
        if source.is_null() {
            return Err(Failure::Null("source"));
        }
        let source = CStr::from_ptr(source)
            .to_str()
            .map_err(|_| Error::invalid("mesh source is not UTF-8"))?;
        let mesh = match depthpose::meshes::builtin(source) {
            Some(m) => m,
            None => depthpose::io::load_mesh(source)?,
        };
        *out = Box::into_raw(Box::new(DpMesh(mesh)));
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from a mesh constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dp_mesh_free(mesh: *mut DpMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dp_mesh_vertex_count(mesh: *const DpMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.vertices().len())
}

/// Maximum pairwise vertex distance; 0 for a null handle.
///
/// # Safety
/// `mesh` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dp_mesh_diameter(mesh: *const DpMesh) -> f64 {
    mesh.as_ref().map_or(0.0, |m| m.0.diameter())
}

/// Lifts a row-major raw depth image (`width * height` values) to a cloud.
///
/// # Safety
/// `depth` must hold `len` values; `k` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dp_cloud_from_depth(
    depth: *const u16,
    len: usize,
    k: *const DpIntrinsics,
    out: *mut *mut DpPointCloud,
) -> DpStatus {
    guard(|| {
        let out = ptr_mut(out, "out")?;
        let d = depth_in(depth, len, k)?;
        *out = Box::into_raw(Box::new(DpPointCloud(lift_depth_to_points(&d))));
        Ok(())
    })
}

/// # Safety
/// `cloud` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dp_cloud_len(cloud: *const DpPointCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// Copies the points into `out` (room for `capacity` points).
///
/// # Safety
/// `cloud` must be live and `out` must hold `3 * capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn dp_cloud_points(cloud: *const DpPointCloud, out: *mut f64, capacity: usize) -> DpStatus {
    guard(|| {
        let c = ptr_ref(cloud, "cloud")?;
        points_out(&c.0.points, out, capacity)
    })
}

/// # Safety
/// `cloud` must come from a cloud constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dp_cloud_free(cloud: *mut DpPointCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Normal-vector-angles image of a depth image. Writes `3 * len` channel
/// bytes (row-major RGB) and `len` mask bytes (1 valid, 0 invalid).
///
/// # Safety
/// `depth` must hold `len` values, `rgb` `3 * len` bytes, `mask` `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dp_angle_image(
    depth: *const u16,
    len: usize,
    k: *const DpIntrinsics,
    rgb: *mut u8,
    mask: *mut u8,
) -> DpStatus {
    guard(|| {
        let d = depth_in(depth, len, k)?;
        if rgb.is_null() || mask.is_null() {
            return Err(Failure::Null("rgb/mask"));
        }
        let img = angle_image_from_depth(&d)?;
        let rgb = slice::from_raw_parts_mut(rgb, len * 3);
        let mask = slice::from_raw_parts_mut(mask, len);
        for (i, px) in img.channels.iter().enumerate() {
            rgb[i * 3..i * 3 + 3].copy_from_slice(px);
            mask[i] = img.valid[i] as u8;
        }
        Ok(())
    })
}

/// Least-squares rigid fit `camera ≈ R model + T` over `n` correspondences.
///
/// # Safety
/// Both point arrays must hold `3 * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_arun_fit(model: *const f64, camera: *const f64, n: usize, out: *mut DpPose) -> DpStatus {
    guard(|| {
        let out = ptr_mut(out, "out")?;
        let m = points_in(model, n, "model")?;
        let c = points_in(camera, n, "camera")?;
        *out = pose_out(&arun_fit(&m, &c)?);
        Ok(())
    })
}

unsafe fn metric(
    mesh: *const DpMesh,
    pred: *const DpPose,
    gt: *const DpPose,
    out: *mut f64,
    f: fn(&TriangleMesh, &RigidPose, &RigidPose) -> depthpose::Result<f64>,
) -> DpStatus {
    guard(|| {
        let out = ptr_mut(out, "out")?;
        let mesh = ptr_ref(mesh, "mesh")?;
        let pred = pose_in(ptr_ref(pred, "pred")?)?;
        let gt = pose_in(ptr_ref(gt, "gt")?)?;
        *out = f(&mesh.0, &pred, &gt)?;
        Ok(())
    })
}

/// ADD: mean distance between corresponding transformed mesh vertices.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dp_add(mesh: *const DpMesh, pred: *const DpPose, gt: *const DpPose, out: *mut f64) -> DpStatus {
    metric(mesh, pred, gt, out, add_metric)
}

/// ADD-S: mean nearest-neighbor distance, for symmetric objects.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dp_adds(mesh: *const DpMesh, pred: *const DpPose, gt: *const DpPose, out: *mut f64) -> DpStatus {
    metric(mesh, pred, gt, out, adds_metric)
}

/// Gaussian mean shift over `n` votes; writes the winning mode and how many
/// votes lie within one bandwidth of it.
///
/// # Safety
/// `votes` must hold `3 * n` doubles, `mode` 3 doubles; `support` may be null.
#[no_mangle]
pub unsafe extern "C" fn dp_mean_shift(
    votes: *const f64,
    n: usize,
    bandwidth: f64,
    seed: u64,
    mode: *mut f64,
    support: *mut usize,
) -> DpStatus {
    guard(|| {
        let v = points_in(votes, n, "votes")?;
        let m = mean_shift(&v, None, &MeanShiftParams::new(bandwidth).with_seed(seed))?;
        points_out(&[m.position], mode, 1)?;
        if let Some(s) = support.as_mut() {
            *s = m.support;
        }
        Ok(())
    })
}

/// Farthest point sampling of `n` mesh vertices, plus the centroid when
/// `add_center` is set. `out` has room for `capacity` points; the number
/// written goes to `count`.
///
/// # Safety
/// `mesh` must be live, `out` must hold `3 * capacity` doubles, `count` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_select_keypoints(
    mesh: *const DpMesh,
    n: usize,
    add_center: bool,
    out: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> DpStatus {
    guard(|| {
        let count = ptr_mut(count, "count")?;
        let mesh = ptr_ref(mesh, "mesh")?;
        let set = select_keypoints(&mesh.0, n, add_center)?;
        points_out(&set.points, out, capacity)?;
        *count = set.points.len();
        Ok(())
    })
}

/// Default end-to-end settings: noiseless oracle, 8 keypoints plus center,
/// bandwidth 0.05 diameters, 12288-point cap.
#[no_mangle]
pub extern "C" fn dp_e2e_config_default() -> DpE2eConfig {
    let defaults = depthpose::config::RunConfig::default();
    DpE2eConfig {
        noise_sigma_rel: 0.0,
        label_flip_rate: 0.0,
        occlusion_fraction: 0.0,
        seed: 0,
        n_keypoints: defaults.n_keypoints,
        add_center: defaults.add_center,
        bandwidth_rel: defaults.bandwidth_rel,
        symmetric: false,
        max_points: defaults.n_points,
    }
}

/// Render, oracle prediction, voting, fit and scoring of one synthetic frame.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dp_run_e2e(
    mesh: *const DpMesh,
    gt: *const DpPose,
    k: *const DpIntrinsics,
    config: *const DpE2eConfig,
    out: *mut DpE2eResult,
) -> DpStatus {
    guard(|| {
        let out = ptr_mut(out, "out")?;
        let mesh = &ptr_ref(mesh, "mesh")?.0;
        let gt = pose_in(ptr_ref(gt, "gt")?)?;
        let k = intrinsics(ptr_ref(k, "intrinsics")?)?;
        let cfg = ptr_ref(config, "config")?;
        let d = mesh.diameter();
        let oracle = OracleSettings {
            noise_sigma_rel: cfg.noise_sigma_rel,
            label_flip_rate: cfg.label_flip_rate,
            occlusion_fraction: cfg.occlusion_fraction,
        }
        .to_config(d, cfg.seed);
        oracle.validate()?;
        let keypoints = select_keypoints(mesh, cfg.n_keypoints, cfg.add_center)?;
        let params = E2eParams {
            mesh_id: "ffi".into(),
            intrinsics: k,
            oracle,
            bandwidth: cfg.bandwidth_rel * d,
            symmetric: cfg.symmetric,
            max_points: (cfg.max_points > 0).then_some(cfg.max_points),
        };
        let r = run_e2e(mesh, &gt, &keypoints, &params)?;
        *out = DpE2eResult {
            pose: pose_out(&r.pose),
            add: r.report.add,
            adds: r.report.adds,
            threshold: r.report.threshold,
            visible_points: r.visible_points,
        };
        Ok(())
    })
}
