//! File formats: intrinsics JSON, 16-bit depth PNG/PGM, ASCII PLY, angle
//! images with mask, keypoint and pose JSON, prediction JSON-lines, scene
//! bundles and evaluation reports.
//!
//! Every writer goes through [`write_atomic`] (temp file + rename).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageReader};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthImage, Mat3, PointCloud, RigidPose, TriangleMesh, Vec3};
use crate::keypoints::KeypointSet;
use crate::metrics::EvalSummary;
use crate::normals::AngleImage;
use crate::voting::{OffsetPrediction, VotedKeypoints};

pub const DEPTH_FILE: &str = "depth.png";
pub const MASK_FILE: &str = "mask.png";
pub const INTRINSICS_FILE: &str = "intrinsics.json";
pub const GT_POSE_FILE: &str = "gt_pose.json";
pub const KEYPOINTS_FILE: &str = "keypoints.json";
pub const PREDICTIONS_FILE: &str = "preds.jsonl";
pub const POSE_FILE: &str = "pose.json";

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("serializable");
    s.push(b'\n');
    s
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_string(path)?).map_err(|e| Error::parse(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value))
}

// ---------------------------------------------------------------- intrinsics

pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let k: CameraIntrinsics = read_json(path)?;
    k.validate().map_err(|e| Error::parse(path, e))?;
    Ok(k)
}

pub fn write_intrinsics(path: &Path, k: &CameraIntrinsics) -> Result<()> {
    write_json(path, k)
}

// --------------------------------------------------------------------- depth

/// Reads a 16-bit single-channel PNG or PGM (binary or ASCII).
pub fn read_depth(path: &Path, k: &CameraIntrinsics) -> Result<DepthImage> {
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::parse(path, e))?;
    let gray = match img {
        image::DynamicImage::ImageLuma16(g) => g,
        image::DynamicImage::ImageLuma8(g) => image::DynamicImage::ImageLuma8(g).into_luma16(),
        other => {
            return Err(Error::parse(
                path,
                format!("expected a single-channel depth image, got {:?}", other.color()),
            ))
        }
    };
    if gray.width() != k.width || gray.height() != k.height {
        return Err(Error::parse(
            path,
            format!(
                "image is {}x{} but intrinsics describe {}x{}",
                gray.width(),
                gray.height(),
                k.width,
                k.height
            ),
        ));
    }
    DepthImage::new(gray.into_raw(), *k)
}

/// Writes raw depth as 16-bit PNG, or ASCII PGM when the extension is `.pgm`.
pub fn write_depth(path: &Path, depth: &DepthImage) -> Result<()> {
    let (w, h) = (depth.width(), depth.height());
    let mut buf = Vec::new();
    if extension(path) == "pgm" {
        let mut text = format!("P2\n{w} {h}\n65535\n");
        for row in depth.data().chunks(w as usize) {
            let line: Vec<String> = row.iter().map(u16::to_string).collect();
            text.push_str(&line.join(" "));
            text.push('\n');
        }
        buf = text.into_bytes();
    } else {
        let bytes: Vec<u8> = depth.data().iter().flat_map(|v| v.to_ne_bytes()).collect();
        image::codecs::png::PngEncoder::new(&mut buf)
            .write_image(&bytes, w, h, ExtendedColorType::L16)
            .map_err(|e| Error::parse(path, e))?;
    }
    write_atomic(path, &buf)
}

fn encode_png(path: &Path, bytes: &[u8], w: u32, h: u32, color: ExtendedColorType) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    image::codecs::png::PngEncoder::new(&mut buf)
        .write_image(bytes, w, h, color)
        .map_err(|e| Error::parse(path, e))?;
    Ok(buf)
}

/// 8-bit single-channel mask, 255 = set.
pub fn write_mask(path: &Path, mask: &[bool], width: u32, height: u32) -> Result<()> {
    let bytes: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_atomic(path, &encode_png(path, &bytes, width, height, ExtendedColorType::L8)?)
}

pub fn read_mask(path: &Path) -> Result<(Vec<bool>, u32, u32)> {
    let img = image::open(path).map_err(|e| Error::parse(path, e))?.into_luma8();
    let (w, h) = img.dimensions();
    Ok((img.into_raw().into_iter().map(|v| v > 127).collect(), w, h))
}

/// Mask path paired with an angle image: `<stem>_mask.png` next to it.
pub fn mask_path_for(image_path: &Path) -> PathBuf {
    let stem = image_path.file_stem().and_then(|s| s.to_str()).unwrap_or("angles");
    image_path.with_file_name(format!("{stem}_mask.png"))
}

/// Writes the angle image (PNG, or ASCII PPM for `.ppm`) and its mask pair.
/// Returns the mask path.
pub fn write_angle_image(path: &Path, img: &AngleImage) -> Result<PathBuf> {
    let bytes: Vec<u8> = img.channels.iter().flatten().copied().collect();
    let buf = if extension(path) == "ppm" {
        let mut buf = Vec::new();
        PnmEncoder::new(&mut buf)
            .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Ascii))
            .write_image(&bytes, img.width, img.height, ExtendedColorType::Rgb8)
            .map_err(|e| Error::parse(path, e))?;
        buf
    } else {
        encode_png(path, &bytes, img.width, img.height, ExtendedColorType::Rgb8)?
    };
    write_atomic(path, &buf)?;
    let mask = mask_path_for(path);
    write_mask(&mask, &img.valid, img.width, img.height)?;
    Ok(mask)
}

pub fn read_angle_image(path: &Path) -> Result<AngleImage> {
    let rgb = image::open(path).map_err(|e| Error::parse(path, e))?.into_rgb8();
    let (width, height) = rgb.dimensions();
    let (valid, mw, mh) = read_mask(&mask_path_for(path))?;
    if (mw, mh) != (width, height) {
        return Err(Error::parse(path, "mask size differs from image size"));
    }
    let channels = rgb.pixels().map(|p| p.0).collect();
    Ok(AngleImage {
        width,
        height,
        channels,
        valid,
    })
}

// ----------------------------------------------------------------------- PLY

fn format_cloud_ply(cloud: &PointCloud, normals: Option<&[Vec3]>) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", cloud.len()));
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    if normals.is_some() {
        out.push_str("property double nx\nproperty double ny\nproperty double nz\n");
    }
    if cloud.labels.is_some() {
        out.push_str("property uint label\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        out.push_str(&format!("{} {} {}", p.x, p.y, p.z));
        if let Some(n) = normals {
            out.push_str(&format!(" {} {} {}", n[i].x, n[i].y, n[i].z));
        }
        if let Some(l) = &cloud.labels {
            out.push_str(&format!(" {}", l[i]));
        }
        out.push('\n');
    }
    out
}

pub fn write_cloud_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_atomic(path, format_cloud_ply(cloud, None).as_bytes())
}

/// Cloud with per-point normals (`x y z nx ny nz [label]`).
pub fn write_oriented_ply(path: &Path, cloud: &PointCloud, normals: &[Vec3]) -> Result<()> {
    if normals.len() != cloud.len() {
        return Err(Error::invalid("normals and points differ in length"));
    }
    write_atomic(path, format_cloud_ply(cloud, Some(normals)).as_bytes())
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

struct Ply {
    elements: Vec<PlyElement>,
    body: Vec<String>,
}

fn parse_ply(path: &Path, text: &str) -> Result<Ply> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(Error::parse(path, "missing 'ply' magic"));
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_done = false;
    for line in lines.by_ref() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(Error::parse(path, format!("unsupported PLY format '{fmt}', only ascii")));
            }
            ["format", ..] | ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count.parse().map_err(|e| Error::parse(path, e))?,
                properties: Vec::new(),
            }),
            ["property", "list", _, _, name] | ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| Error::parse(path, "property before element"))?
                .properties
                .push(name.to_string()),
            ["end_header"] => {
                header_done = true;
                break;
            }
            other => return Err(Error::parse(path, format!("unexpected header line {other:?}"))),
        }
    }
    if !header_done {
        return Err(Error::parse(path, "missing end_header"));
    }
    let body = lines.filter(|l| !l.trim().is_empty()).map(str::to_string).collect();
    Ok(Ply { elements, body })
}

fn parse_numbers(path: &Path, line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::parse(path, format!("'{t}': {e}"))))
        .collect()
}

/// Vertices, faces and optional per-vertex labels.
type PlyGeometry = (Vec<Vec3>, Vec<[usize; 3]>, Option<Vec<u32>>);

/// Vertices (and faces, when present) of an ASCII PLY.
fn read_ply_geometry(path: &Path) -> Result<PlyGeometry> {
    let text = read_string(path)?;
    let ply = parse_ply(path, &text)?;
    let mut rows = ply.body.iter();
    let mut vertices = Vec::new();
    let mut labels = None;
    let mut faces = Vec::new();
    for el in &ply.elements {
        match el.name.as_str() {
            "vertex" => {
                let col = |name: &str| el.properties.iter().position(|p| p == name);
                let (ix, iy, iz) = match (col("x"), col("y"), col("z")) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return Err(Error::parse(path, "vertex element lacks x/y/z")),
                };
                let il = col("label");
                let mut ls = Vec::new();
                for _ in 0..el.count {
                    let row = rows.next().ok_or_else(|| Error::parse(path, "truncated vertex list"))?;
                    let v = parse_numbers(path, row)?;
                    if v.len() < el.properties.len() {
                        return Err(Error::parse(path, format!("short vertex row '{row}'")));
                    }
                    vertices.push(Vec3::new(v[ix], v[iy], v[iz]));
                    if let Some(il) = il {
                        ls.push(v[il] as u32);
                    }
                }
                if il.is_some() {
                    labels = Some(ls);
                }
            }
            "face" => {
                for _ in 0..el.count {
                    let row = rows.next().ok_or_else(|| Error::parse(path, "truncated face list"))?;
                    let idx: Vec<usize> = row
                        .split_whitespace()
                        .map(|t| t.parse::<usize>().map_err(|e| Error::parse(path, format!("'{t}': {e}"))))
                        .collect::<Result<_>>()?;
                    let (n, rest) = idx.split_first().ok_or_else(|| Error::parse(path, "empty face row"))?;
                    if *n < 3 || rest.len() < *n {
                        return Err(Error::parse(path, format!("bad face row '{row}'")));
                    }
                    // Fan-triangulate polygons.
                    for i in 1..n - 1 {
                        faces.push([rest[0], rest[i], rest[i + 1]]);
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    rows.next();
                }
            }
        }
    }
    Ok((vertices, faces, labels))
}

pub fn read_cloud_ply(path: &Path) -> Result<PointCloud> {
    let (points, _, labels) = read_ply_geometry(path)?;
    let cloud = PointCloud {
        points,
        source_pixels: None,
        labels,
    };
    cloud.validate().map_err(|e| Error::parse(path, e))?;
    Ok(cloud)
}

pub fn read_mesh_ply(path: &Path) -> Result<TriangleMesh> {
    let (vertices, faces, _) = read_ply_geometry(path)?;
    TriangleMesh::new(vertices, faces).map_err(|e| match e {
        Error::Empty(_) | Error::Degenerate(_) => e,
        other => Error::parse(path, other),
    })
}

pub fn write_mesh_ply(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut out = String::from("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", mesh.vertices().len()));
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    out.push_str(&format!("element face {}\n", mesh.faces().len()));
    out.push_str("property list uchar uint vertex_indices\nend_header\n");
    for v in mesh.vertices() {
        out.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    write_atomic(path, out.as_bytes())
}

/// Loads a mesh from `builtin:<name>` or an ASCII PLY path.
pub fn load_mesh(source: &str) -> Result<TriangleMesh> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return crate::meshes::builtin(name).ok_or_else(|| {
            Error::invalid(format!(
                "unknown builtin mesh '{name}' (known: {})",
                crate::meshes::BUILTIN_NAMES.join(", ")
            ))
        });
    }
    read_mesh_ply(Path::new(source))
}

// ----------------------------------------------------------------- keypoints

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointFile {
    pub object_id: String,
    pub n: usize,
    pub points: Vec<[f64; 3]>,
    pub includes_center: bool,
}

impl KeypointFile {
    pub fn new(object_id: &str, set: &KeypointSet) -> Self {
        Self {
            object_id: object_id.to_string(),
            n: set.len(),
            points: set.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            includes_center: set.includes_center,
        }
    }

    pub fn to_set(&self) -> KeypointSet {
        KeypointSet {
            points: self.points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(),
            includes_center: self.includes_center,
        }
    }
}

pub fn write_keypoints(path: &Path, object_id: &str, set: &KeypointSet) -> Result<()> {
    write_json(path, &KeypointFile::new(object_id, set))
}

pub fn read_keypoints(path: &Path) -> Result<(String, KeypointSet)> {
    let f: KeypointFile = read_json(path)?;
    if f.n != f.points.len() {
        return Err(Error::parse(path, format!("n = {} but {} points listed", f.n, f.points.len())));
    }
    Ok((f.object_id.clone(), f.to_set()))
}

// ---------------------------------------------------------------------- pose

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFile {
    #[serde(rename = "R")]
    pub rotation: [[f64; 3]; 3],
    #[serde(rename = "T")]
    pub translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Value>,
}

impl PoseFile {
    pub fn new(pose: &RigidPose, diagnostics: Option<Value>) -> Self {
        let r = &pose.rotation;
        Self {
            rotation: std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)])),
            translation: [pose.translation.x, pose.translation.y, pose.translation.z],
            diagnostics,
        }
    }

    pub fn to_pose(&self) -> Result<RigidPose> {
        let r = Mat3::from_fn(|i, j| self.rotation[i][j]);
        let t = Vec3::new(self.translation[0], self.translation[1], self.translation[2]);
        RigidPose::new(r, t)
    }
}

pub fn voting_diagnostics(voted: &VotedKeypoints) -> Value {
    serde_json::json!({
        "keypoints_cam": voted.positions.iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>(),
        "support_counts": voted.support_counts,
        "vote_counts": voted.vote_counts,
        "inlier_fraction": voted.inlier_fraction,
        "clusters": voted.clusters,
    })
}

pub fn write_pose(path: &Path, pose: &RigidPose, diagnostics: Option<Value>) -> Result<()> {
    write_json(path, &PoseFile::new(pose, diagnostics))
}

pub fn read_pose(path: &Path) -> Result<RigidPose> {
    let f: PoseFile = read_json(path)?;
    f.to_pose().map_err(|e| Error::parse(path, e))
}

// --------------------------------------------------------------- predictions

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PredictionRecord {
    p: [f64; 3],
    label: u32,
    offsets: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conf: Option<f64>,
}

/// One JSON object per line: `{"p", "label", "offsets", "conf"?}`.
pub fn format_predictions(cloud: &PointCloud, preds: &OffsetPrediction) -> Result<String> {
    if cloud.len() != preds.len() {
        return Err(Error::invalid("cloud and predictions differ in length"));
    }
    let mut out = String::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let rec = PredictionRecord {
            p: [p.x, p.y, p.z],
            label: preds.labels[i],
            offsets: preds.offsets_of(i).iter().map(|o| [o.x, o.y, o.z]).collect(),
            conf: preds.confidence.as_ref().map(|c| c[i]),
        };
        out.push_str(&serde_json::to_string(&rec).expect("serializable"));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, cloud: &PointCloud, preds: &OffsetPrediction) -> Result<()> {
    write_atomic(path, format_predictions(cloud, preds)?.as_bytes())
}

pub fn read_predictions(path: &Path) -> Result<(PointCloud, OffsetPrediction)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut offsets = Vec::new();
    let mut conf: Vec<Option<f64>> = Vec::new();
    let mut n_keypoints = None;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        match n_keypoints {
            None => n_keypoints = Some(rec.offsets.len()),
            Some(n) if n != rec.offsets.len() => {
                return Err(Error::parse(
                    path,
                    format!("line {}: {} offsets, expected {n}", lineno + 1, rec.offsets.len()),
                ))
            }
            _ => {}
        }
        points.push(Vec3::new(rec.p[0], rec.p[1], rec.p[2]));
        labels.push(rec.label);
        offsets.extend(rec.offsets.iter().map(|o| Vec3::new(o[0], o[1], o[2])));
        conf.push(rec.conf);
    }
    let n_keypoints = n_keypoints.ok_or_else(|| Error::Empty(format!("{}: no prediction records", path.display())))?;
    let confidence = if conf.iter().all(Option::is_some) {
        Some(conf.into_iter().flatten().collect())
    } else if conf.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::parse(path, "conf must be given for every record or none"));
    };
    let preds = OffsetPrediction::new(n_keypoints, offsets, labels, confidence).map_err(|e| Error::parse(path, e))?;
    Ok((PointCloud::from_points(points), preds))
}

// -------------------------------------------------------------- scene bundle

/// Contents of a scene bundle directory.
#[derive(Debug, Clone)]
pub struct SceneBundle {
    pub intrinsics: CameraIntrinsics,
    pub gt_pose: Option<RigidPose>,
    pub object_id: String,
    pub keypoints: KeypointSet,
    pub cloud: PointCloud,
    pub predictions: OffsetPrediction,
}

pub struct BundleContents<'a> {
    pub scene: &'a crate::synth::SyntheticScene,
    pub keypoints: &'a KeypointSet,
    pub cloud: &'a PointCloud,
    pub predictions: &'a OffsetPrediction,
}

pub fn write_scene_bundle(dir: &Path, b: &BundleContents<'_>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let s = b.scene;
    write_depth(&dir.join(DEPTH_FILE), &s.depth)?;
    write_mask(&dir.join(MASK_FILE), &s.gt_mask, s.depth.width(), s.depth.height())?;
    write_intrinsics(&dir.join(INTRINSICS_FILE), s.depth.intrinsics())?;
    write_pose(&dir.join(GT_POSE_FILE), &s.gt_pose, None)?;
    write_keypoints(&dir.join(KEYPOINTS_FILE), &s.mesh_id, b.keypoints)?;
    write_predictions(&dir.join(PREDICTIONS_FILE), b.cloud, b.predictions)?;
    Ok(())
}

pub fn read_scene_bundle(dir: &Path) -> Result<SceneBundle> {
    let intrinsics = read_intrinsics(&dir.join(INTRINSICS_FILE))?;
    let gt_path = dir.join(GT_POSE_FILE);
    let gt_pose = if gt_path.exists() {
        Some(read_pose(&gt_path)?)
    } else {
        None
    };
    let (object_id, keypoints) = read_keypoints(&dir.join(KEYPOINTS_FILE))?;
    let (cloud, predictions) = read_predictions(&dir.join(PREDICTIONS_FILE))?;
    Ok(SceneBundle {
        intrinsics,
        gt_pose,
        object_id,
        keypoints,
        cloud,
        predictions,
    })
}

pub fn is_scene_bundle(dir: &Path) -> bool {
    dir.join(KEYPOINTS_FILE).is_file() && dir.join(INTRINSICS_FILE).is_file()
}

// ------------------------------------------------------------------- reports

pub fn format_eval_csv(rows: &[EvalSummary]) -> String {
    let mut out = String::from("object,n_frames,add_mean,adds_mean,acc@0.1d\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.9},{:.9},{:.6}\n",
            r.object, r.n_frames, r.add_mean, r.adds_mean, r.accuracy
        ));
    }
    out
}

pub fn write_eval_report(csv_path: &Path, json_path: &Path, rows: &[EvalSummary]) -> Result<()> {
    write_atomic(csv_path, format_eval_csv(rows).as_bytes())?;
    write_json(json_path, &rows)
}

/// Sorted subdirectories of `dir`.
pub fn list_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    Ok(out)
}
