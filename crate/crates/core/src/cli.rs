//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input or parse error, 3 empty or degenerate data,
//! 4 pipeline failure. Results go to files and standard output; one log line
//! per stage (with timing) goes to standard error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{lift_depth_to_points, PointCloud, TriangleMesh};
use crate::io;
use crate::keypoints::select_keypoints;
use crate::metrics::{evaluate_pose, summarize, PoseErrorReport};
use crate::normals::{compute_normals, generate_angle_image};
use crate::synth::{oracle_predict, random_pose, render_depth, SyntheticScene};
use crate::trials::{self, TrialRecord, TrialSetup};
use crate::voting::{estimate_pose, MeanShiftParams};

#[derive(Debug, Parser)]
#[command(name = "depthpose", version, about = "Depth-only 6DoF pose pipeline tools")]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the config seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lift a depth image to an ASCII PLY point cloud.
    Lift {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
    },
    /// Estimate surface normals and write them as an oriented PLY.
    Normals {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
    },
    /// Write the normal-vector-angles image and its validity mask.
    Angles {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
    },
    /// Select keypoints on a mesh by farthest point sampling.
    Keypoints {
        /// `builtin:<name>` or ASCII PLY path.
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// Do not append the mesh centroid.
        #[arg(long)]
        no_center: bool,
        #[arg(long)]
        object_id: Option<String>,
    },
    /// Ray-cast a depth image of a mesh under a pose.
    Render {
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        pose: PathBuf,
        #[arg(long)]
        intrinsics: Option<PathBuf>,
    },
    /// Write seeded synthetic scene bundles with oracle predictions.
    Synth {
        #[arg(long, default_value_t = 1)]
        n_scenes: usize,
    },
    /// Estimate poses for one scene bundle or a directory of bundles.
    Estimate {
        #[arg(long)]
        scene: PathBuf,
    },
    /// Score predicted poses against ground truth (ADD / ADD-S).
    Eval {
        #[arg(long)]
        pred_dir: PathBuf,
        #[arg(long)]
        gt_dir: PathBuf,
        #[arg(long)]
        mesh: Option<String>,
    },
    /// Run seeded end-to-end trials, or the noise/occlusion sweep.
    E2e {
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        noise_rel: Option<f64>,
        #[arg(long)]
        occlusion: Option<f64>,
        #[arg(long)]
        flip_rate: Option<f64>,
        /// Run the robustness grid instead of a single configuration.
        #[arg(long)]
        sweep: bool,
    },
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn stage(name: &str, start: Instant, detail: impl std::fmt::Display) {
    log::info!("stage={name} ms={:.3} {detail}", start.elapsed().as_secs_f64() * 1e3);
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
    out: Option<PathBuf>,
}

impl Ctx {
    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn mesh(&self, flag: Option<&String>) -> Result<TriangleMesh> {
        match flag {
            Some(source) => io::load_mesh(source),
            None => self.cfg.load_mesh(),
        }
    }

    fn mesh_id(&self, flag: Option<&String>) -> String {
        let source = flag.or(self.cfg.mesh.as_ref());
        match source {
            Some(s) if self.cfg.object_id == RunConfig::default().object_id => s
                .strip_prefix("builtin:")
                .map(str::to_string)
                .unwrap_or_else(|| {
                    Path::new(s)
                        .file_stem()
                        .and_then(|x| x.to_str())
                        .unwrap_or("object")
                        .to_string()
                }),
            _ => self.cfg.object_id.clone(),
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    let cfg = RunConfig::load_or_default(cli.config.as_deref())?;
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(cfg.seed),
        out: cli.out.clone().or_else(|| cfg.output.clone()),
        cfg,
    };
    match &cli.command {
        Command::Lift { depth, intrinsics } => cmd_lift(&ctx, depth, intrinsics),
        Command::Normals { depth, intrinsics } => cmd_normals(&ctx, depth, intrinsics),
        Command::Angles { depth, intrinsics } => cmd_angles(&ctx, depth, intrinsics),
        Command::Keypoints {
            mesh,
            n,
            no_center,
            object_id,
        } => cmd_keypoints(&ctx, mesh.as_ref(), *n, *no_center, object_id.as_deref()),
        Command::Render { mesh, pose, intrinsics } => cmd_render(&ctx, mesh.as_ref(), pose, intrinsics.as_deref()),
        Command::Synth { n_scenes } => cmd_synth(&ctx, *n_scenes),
        Command::Estimate { scene } => cmd_estimate(&ctx, scene),
        Command::Eval { pred_dir, gt_dir, mesh } => cmd_eval(&ctx, pred_dir, gt_dir, mesh.as_ref()),
        Command::E2e {
            mesh,
            trials,
            noise_rel,
            occlusion,
            flip_rate,
            sweep,
        } => {
            let mut oracle = ctx.cfg.oracle;
            if let Some(v) = noise_rel {
                oracle.noise_sigma_rel = *v;
            }
            if let Some(v) = occlusion {
                oracle.occlusion_fraction = *v;
            }
            if let Some(v) = flip_rate {
                oracle.label_flip_rate = *v;
            }
            oracle.to_config(1.0, 0).validate()?;
            cmd_e2e(&ctx, mesh.as_ref(), *trials, oracle, *sweep)
        }
    }
}

fn load_depth(depth: &Path, intrinsics: &Path) -> Result<crate::geometry::DepthImage> {
    let t = Instant::now();
    let k = io::read_intrinsics(intrinsics)?;
    let d = io::read_depth(depth, &k)?;
    stage("read_depth", t, format!("valid={}", d.valid_count()));
    Ok(d)
}

fn cmd_lift(ctx: &Ctx, depth: &Path, intrinsics: &Path) -> Result<i32> {
    let depth = load_depth(depth, intrinsics)?;
    let t = Instant::now();
    let cloud = lift_depth_to_points(&depth);
    stage("lift", t, format!("points={}", cloud.len()));
    if cloud.is_empty() {
        return Err(Error::Empty("depth image has no valid pixels".into()));
    }
    let out = ctx.out_or("cloud.ply");
    io::write_cloud_ply(&out, &cloud)?;
    println!("{}", cloud.len());
    Ok(0)
}

fn cmd_normals(ctx: &Ctx, depth: &Path, intrinsics: &Path) -> Result<i32> {
    let depth = load_depth(depth, intrinsics)?;
    let t = Instant::now();
    let map = compute_normals(&depth);
    stage("normals", t, format!("valid={}", map.valid_count()));
    if map.valid_count() == 0 {
        return Err(Error::Empty("no pixel has a valid normal".into()));
    }
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for v in 0..depth.height() {
        for u in 0..depth.width() {
            if let (Some(n), Some(p)) = (map.get(u, v), depth.point(u, v)) {
                points.push(p);
                normals.push(n);
            }
        }
    }
    io::write_oriented_ply(&ctx.out_or("normals.ply"), &PointCloud::from_points(points), &normals)?;
    println!("{}", normals.len());
    Ok(0)
}

fn cmd_angles(ctx: &Ctx, depth: &Path, intrinsics: &Path) -> Result<i32> {
    let depth = load_depth(depth, intrinsics)?;
    let t = Instant::now();
    let img = generate_angle_image(&compute_normals(&depth))?;
    stage("angles", t, format!("valid={}", img.valid_count()));
    let out = ctx.out_or("angles.png");
    let mask = io::write_angle_image(&out, &img)?;
    println!("{} {} {}", out.display(), mask.display(), img.valid_count());
    Ok(0)
}

fn cmd_keypoints(ctx: &Ctx, mesh: Option<&String>, n: Option<usize>, no_center: bool, object_id: Option<&str>) -> Result<i32> {
    let t = Instant::now();
    let m = ctx.mesh(mesh)?;
    let set = select_keypoints(&m, n.unwrap_or(ctx.cfg.n_keypoints), ctx.cfg.add_center && !no_center)?;
    stage("keypoints", t, format!("n={}", set.len()));
    let id = object_id.map(str::to_string).unwrap_or_else(|| ctx.mesh_id(mesh));
    io::write_keypoints(&ctx.out_or("keypoints.json"), &id, &set)?;
    println!("{}", set.len());
    Ok(0)
}

fn cmd_render(ctx: &Ctx, mesh: Option<&String>, pose: &Path, intrinsics: Option<&Path>) -> Result<i32> {
    let t = Instant::now();
    let m = ctx.mesh(mesh)?;
    let pose = io::read_pose(pose)?;
    let k = match intrinsics {
        Some(p) => io::read_intrinsics(p)?,
        None => ctx.cfg.load_camera()?,
    };
    let r = render_depth(&m, &pose, &k)?;
    stage("render", t, format!("hits={}", r.hit_count()));
    let dir = ctx.out_or("render");
    io::write_depth(&dir.join(io::DEPTH_FILE), &r.depth)?;
    io::write_mask(&dir.join(io::MASK_FILE), &r.mask, k.width, k.height)?;
    io::write_intrinsics(&dir.join(io::INTRINSICS_FILE), &k)?;
    println!("{}", r.hit_count());
    Ok(0)
}

fn cmd_synth(ctx: &Ctx, n_scenes: usize) -> Result<i32> {
    if n_scenes == 0 {
        return Err(Error::invalid("n_scenes must be positive"));
    }
    let mesh = ctx.cfg.load_mesh()?;
    let mesh_id = ctx.mesh_id(None);
    let k = ctx.cfg.load_camera()?;
    let kp = select_keypoints(&mesh, ctx.cfg.n_keypoints, ctx.cfg.add_center)?;
    let dir = ctx.out_or("scenes");
    let seeds = trials::trial_seeds(ctx.seed, n_scenes);
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| -> Result<()> {
            let t = Instant::now();
            let pose = random_pose(seed, &k, mesh.diameter());
            let scene = SyntheticScene::render(&mesh_id, &mesh, &pose, &k, &kp, seed)?;
            let out = oracle_predict(&scene, &ctx.cfg.oracle.to_config(mesh.diameter(), seed))?;
            io::write_scene_bundle(
                &dir.join(format!("scene_{i:04}")),
                &io::BundleContents {
                    scene: &scene,
                    keypoints: &kp,
                    cloud: &out.cloud,
                    predictions: &out.predictions,
                },
            )?;
            stage("synth", t, format!("scene={i} seed={seed} points={}", out.cloud.len()));
            Ok(())
        })
        .collect::<Result<()>>()?;
    println!("{n_scenes}");
    Ok(0)
}

fn bundle_mesh(ctx: &Ctx, object_id: &str) -> Result<TriangleMesh> {
    if ctx.cfg.mesh.is_some() {
        return ctx.cfg.load_mesh();
    }
    crate::meshes::builtin(object_id)
        .map(Ok)
        .unwrap_or_else(|| ctx.cfg.load_mesh())
}

struct EstimateResult {
    report: Option<PoseErrorReport>,
    rotation_error: Option<f64>,
    translation_error: Option<f64>,
    points: usize,
}

fn estimate_bundle(ctx: &Ctx, scene: &Path, out: &Path) -> Result<EstimateResult> {
    let t = Instant::now();
    let b = io::read_scene_bundle(scene)?;
    stage("read_bundle", t, format!("scene={} points={}", scene.display(), b.cloud.len()));
    let mesh = bundle_mesh(ctx, &b.object_id)?;
    let t = Instant::now();
    let params = MeanShiftParams::new(ctx.cfg.bandwidth(mesh.diameter())).with_seed(ctx.seed);
    let (pose, voted) = estimate_pose(&b.cloud, &b.predictions, &b.keypoints, ctx.cfg.target_label, &params)?;
    stage("estimate", t, format!("scene={}", scene.display()));
    let mut diag = io::voting_diagnostics(&voted);
    let mut res = EstimateResult {
        report: None,
        rotation_error: None,
        translation_error: None,
        points: b.cloud.len(),
    };
    if let Some(gt) = &b.gt_pose {
        let report = evaluate_pose(&mesh, &pose, gt, ctx.cfg.symmetric)?;
        res.rotation_error = Some(pose.rotation_error(gt));
        res.translation_error = Some(pose.translation_error(gt));
        diag["gt"] = serde_json::json!({
            "add": report.add,
            "adds": report.adds,
            "rotation_error_rad": res.rotation_error,
            "translation_error_m": res.translation_error,
        });
        res.report = Some(report);
    }
    io::write_pose(out, &pose, Some(diag))?;
    Ok(res)
}

fn cmd_estimate(ctx: &Ctx, scene: &Path) -> Result<i32> {
    if io::is_scene_bundle(scene) {
        let out = ctx.out.clone().unwrap_or_else(|| scene.join(io::POSE_FILE));
        estimate_bundle(ctx, scene, &out)?;
        println!("{}", out.display());
        return Ok(0);
    }
    if !scene.is_dir() {
        return Err(Error::io(scene, std::io::Error::new(std::io::ErrorKind::NotFound, "no such directory")));
    }
    let bundles: Vec<PathBuf> = io::list_dirs(scene)?
        .into_iter()
        .filter(|d| io::is_scene_bundle(d))
        .collect();
    if bundles.is_empty() {
        return Err(Error::invalid(format!("{} holds no scene bundles", scene.display())));
    }
    let out_dir = ctx.out_or(&scene.join("poses").to_string_lossy());
    let results: Vec<(String, Result<EstimateResult>)> = bundles
        .par_iter()
        .map(|b| {
            let name = b.file_name().and_then(|n| n.to_str()).unwrap_or("scene").to_string();
            let r = estimate_bundle(ctx, b, &out_dir.join(format!("{name}.json")));
            (name, r)
        })
        .collect();
    let mut csv = String::from("scene,status,points,add,adds,rot_err_rad,trans_err_m\n");
    let mut worst = 0;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (name, r) in &results {
        match r {
            Ok(r) => csv.push_str(&format!(
                "{name},ok,{},{},{},{},{}\n",
                r.points,
                fmt(r.report.map(|x| x.add)),
                fmt(r.report.map(|x| x.adds)),
                fmt(r.rotation_error),
                fmt(r.translation_error)
            )),
            Err(e) => {
                eprintln!("error: {name}: {e}");
                worst = worst.max(e.exit_code());
                csv.push_str(&format!("{name},error {},,,,,\n", e.exit_code()));
            }
        }
    }
    io::write_atomic(&out_dir.join("summary.csv"), csv.as_bytes())?;
    println!("{}", results.iter().filter(|(_, r)| r.is_ok()).count());
    Ok(worst)
}

fn pose_entries(pred_dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    let entries = fs::read_dir(pred_dir).map_err(|e| Error::io(pred_dir, e))?;
    for entry in entries.filter_map(|e| e.ok()) {
        let path = entry.path();
        if path.is_dir() {
            let pose = path.join(io::POSE_FILE);
            if pose.is_file() {
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
                out.push((name, pose));
            }
        } else if path.extension().and_then(|e| e.to_str()) == Some("json") {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if stem == "eval" {
                continue;
            }
            out.push((stem.trim_end_matches(".pose").to_string(), path));
        }
    }
    out.sort();
    Ok(out)
}

fn cmd_eval(ctx: &Ctx, pred_dir: &Path, gt_dir: &Path, mesh: Option<&String>) -> Result<i32> {
    let t = Instant::now();
    let m = match mesh {
        Some(_) => ctx.mesh(mesh)?,
        None => bundle_mesh(ctx, &ctx.cfg.object_id)?,
    };
    let entries = pose_entries(pred_dir)?;
    if entries.is_empty() {
        return Err(Error::Empty(format!("no pose files in {}", pred_dir.display())));
    }
    let mut reports = Vec::with_capacity(entries.len());
    for (name, path) in &entries {
        let pred = io::read_pose(path)?;
        let nested = gt_dir.join(name).join(io::GT_POSE_FILE);
        let gt_path = if nested.is_file() {
            nested
        } else {
            gt_dir.join(format!("{name}.json"))
        };
        let gt = io::read_pose(&gt_path)?;
        reports.push(evaluate_pose(&m, &pred, &gt, ctx.cfg.symmetric)?);
    }
    let summary = summarize(&ctx.mesh_id(mesh), &reports, ctx.cfg.use_adds_for_symmetric)?;
    stage("eval", t, format!("frames={} acc={}", summary.n_frames, summary.accuracy));
    let dir = ctx.out.clone().unwrap_or_else(|| pred_dir.to_path_buf());
    let rows = [summary];
    io::write_eval_report(&dir.join("eval.csv"), &dir.join("eval.json"), &rows)?;
    print!("{}", io::format_eval_csv(&rows));
    Ok(0)
}

fn cmd_e2e(
    ctx: &Ctx,
    mesh: Option<&String>,
    n_trials: Option<usize>,
    oracle: crate::config::OracleSettings,
    sweep: bool,
) -> Result<i32> {
    let m = ctx.mesh(mesh)?;
    let id = ctx.mesh_id(mesh);
    let kp = select_keypoints(&m, ctx.cfg.n_keypoints, ctx.cfg.add_center)?;
    let setup = TrialSetup {
        mesh_id: &id,
        mesh: &m,
        keypoints: &kp,
        intrinsics: ctx.cfg.load_camera()?,
        bandwidth_rel: ctx.cfg.bandwidth_rel,
        symmetric: ctx.cfg.symmetric,
        max_points: Some(ctx.cfg.n_points),
    };
    let dir = ctx.out_or("e2e");
    let t = Instant::now();
    if sweep {
        let seeds = trials::trial_seeds(ctx.seed, n_trials.unwrap_or(trials::SWEEP_SEEDS));
        let cells = trials::robustness_sweep(
            &setup,
            &trials::SWEEP_NOISE_LEVELS,
            &trials::SWEEP_OCCLUSIONS,
            &seeds,
            ctx.cfg.use_adds_for_symmetric,
        )?;
        let csv = trials::format_sweep_csv(&cells);
        io::write_atomic(&dir.join("robustness.csv"), csv.as_bytes())?;
        stage("sweep", t, format!("cells={}", cells.len()));
        print!("{csv}");
        return Ok(0);
    }
    let seeds = trials::trial_seeds(ctx.seed, n_trials.unwrap_or(1));
    let outcomes: Vec<_> = seeds
        .par_iter()
        .map(|&s| trials::run_trial(&setup, &oracle, s))
        .collect::<Result<_>>()?;
    let mut records = Vec::with_capacity(outcomes.len());
    for (i, (out, &seed)) in outcomes.iter().zip(&seeds).enumerate() {
        io::write_angle_image(&dir.join(format!("angles_{i:04}.png")), &out.angle_image)?;
        io::write_pose(&dir.join(format!("pose_{i:04}.json")), &out.pose, Some(io::voting_diagnostics(&out.voted)))?;
        records.push(TrialRecord::from_outcome(i, seed, out));
    }
    io::write_atomic(&dir.join("trials.csv"), trials::format_trials_csv(&records).as_bytes())?;
    let reports: Vec<PoseErrorReport> = records.iter().map(|r| r.report).collect();
    let summary = summarize(&id, &reports, ctx.cfg.use_adds_for_symmetric)?;
    io::write_eval_report(&dir.join("eval.csv"), &dir.join("eval.json"), std::slice::from_ref(&summary))?;
    stage("e2e", t, format!("trials={} acc={}", records.len(), summary.accuracy));
    print!("{}", io::format_eval_csv(std::slice::from_ref(&summary)));
    Ok(0)
}
