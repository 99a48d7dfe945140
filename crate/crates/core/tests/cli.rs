use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use depthpose::config::default_camera;
use depthpose::geometry::{DepthImage, RigidPose, Vec3};
use depthpose::io;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depthpose"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Depth image of a fronto-parallel square patch at 0.8 m.
fn patch_scene(dir: &Path) -> (PathBuf, PathBuf, usize) {
    let k = default_camera();
    let mut data = vec![0u16; k.pixel_count()];
    let mut n = 0;
    for v in 30..90 {
        for u in 50..110 {
            data[v * 160 + u] = 800;
            n += 1;
        }
    }
    let depth = dir.join("depth.png");
    let intr = dir.join("intrinsics.json");
    io::write_depth(&depth, &DepthImage::new(data, k).unwrap()).unwrap();
    io::write_intrinsics(&intr, &k).unwrap();
    (depth, intr, n)
}

#[test]
fn help_version_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["lift"])), 2);
}

#[test]
fn lift_normals_angles() {
    let dir = TempDir::new().unwrap();
    let (depth, intr, n) = patch_scene(dir.path());

    let cloud = dir.path().join("cloud.ply");
    let out = run(&["--out", p(&cloud), "lift", "--depth", p(&depth), "--intrinsics", p(&intr)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).trim(), n.to_string());
    let back = io::read_cloud_ply(&cloud).unwrap();
    assert_eq!(back.len(), n);
    assert!(back.points.iter().all(|q| (q.z - 0.8).abs() < 1e-12));

    let normals = dir.path().join("normals.ply");
    let out = run(&["--out", p(&normals), "normals", "--depth", p(&depth), "--intrinsics", p(&intr)]);
    assert_eq!(code(&out), 0);
    // Border pixels of the patch have no valid normal.
    assert_eq!(stdout(&out).trim(), (58 * 58).to_string());
    assert!(fs::read_to_string(&normals).unwrap().contains("property double nx"));

    let angles = dir.path().join("angles.png");
    let out = run(&["--out", p(&angles), "angles", "--depth", p(&depth), "--intrinsics", p(&intr)]);
    assert_eq!(code(&out), 0);
    let img = io::read_angle_image(&angles).unwrap();
    assert_eq!(img.valid_count(), 58 * 58);
    assert_eq!(img.get(80, 60), [128, 128, 255]);
    assert_eq!(img.get(0, 0), [0, 0, 0]);
    assert!(dir.path().join("angles_mask.png").is_file());
}

#[test]
fn input_errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let (depth, intr, _) = patch_scene(dir.path());
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run(&["lift", "--depth", p(&depth), "--intrinsics", p(&missing)])), 2);

    let bad_png = dir.path().join("bad.png");
    fs::write(&bad_png, b"\x89PNG\r\n\x1a\nnot really").unwrap();
    assert_eq!(code(&run(&["lift", "--depth", p(&bad_png), "--intrinsics", p(&intr)])), 2);

    let zeros = dir.path().join("zeros.png");
    io::write_depth(&zeros, &DepthImage::zeros(default_camera()).unwrap()).unwrap();
    let out = run(&["--out", p(&dir.path().join("z.ply")), "lift", "--depth", p(&zeros), "--intrinsics", p(&intr)]);
    assert_eq!(code(&out), 3);
    assert!(!dir.path().join("z.ply").exists());

    let bad_cfg = dir.path().join("cfg.json");
    fs::write(&bad_cfg, r#"{"n_keypionts": 4}"#).unwrap();
    assert_eq!(code(&run(&["--config", p(&bad_cfg), "keypoints", "--mesh", "builtin:cube"])), 2);
    assert_eq!(code(&run(&["keypoints", "--mesh", "builtin:nosuch"])), 2);
    assert_eq!(code(&run(&["e2e", "--mesh", "builtin:cube", "--occlusion", "1.2"])), 2);
}

#[test]
fn keypoints_and_render() {
    let dir = TempDir::new().unwrap();
    let kp = dir.path().join("kp.json");
    let out = run(&["--out", p(&kp), "keypoints", "--mesh", "builtin:cube", "--n", "8"]);
    assert_eq!(code(&out), 0);
    let (id, set) = io::read_keypoints(&kp).unwrap();
    assert_eq!(id, "cube");
    assert_eq!(set.len(), 9);
    assert!(set.includes_center);
    let out = run(&["--out", p(&kp), "keypoints", "--mesh", "builtin:cube", "--n", "4", "--no-center"]);
    assert_eq!(code(&out), 0);
    assert_eq!(io::read_keypoints(&kp).unwrap().1.len(), 4);

    let pose = dir.path().join("pose.json");
    io::write_pose(&pose, &RigidPose::from_translation(Vec3::new(0.0, 0.0, 0.5)), None).unwrap();
    let render = dir.path().join("render");
    let out = run(&["--out", p(&render), "render", "--mesh", "builtin:cube", "--pose", p(&pose)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let k = io::read_intrinsics(&render.join(io::INTRINSICS_FILE)).unwrap();
    let d = io::read_depth(&render.join(io::DEPTH_FILE), &k).unwrap();
    // Front face of the 0.1 m cube sits at z = 0.45 m.
    assert_eq!(d.raw(80, 60), 450);
    assert_eq!(stdout(&out).trim(), d.valid_count().to_string());

    let behind = dir.path().join("behind.json");
    io::write_pose(&behind, &RigidPose::from_translation(Vec3::new(0.0, 0.0, -0.5)), None).unwrap();
    assert_eq!(code(&run(&["render", "--mesh", "builtin:cube", "--pose", p(&behind)])), 4);
}

fn files_under(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for d in io::list_dirs(dir).unwrap() {
        let mut entries: Vec<_> = fs::read_dir(&d).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for f in entries {
            out.push((f.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&f).unwrap()));
        }
    }
    out
}

fn synth(dir: &Path, seed: &str, n: &str, extra_cfg: &str) -> PathBuf {
    let cfg = dir.join("cfg.json");
    fs::write(
        &cfg,
        format!(r#"{{"object_id": "l_bracket", "oracle": {{"noise_sigma_rel": 0.005{extra_cfg}}}}}"#),
    )
    .unwrap();
    let scenes = dir.join(format!("scenes_{seed}"));
    let out = run(&["--config", p(&cfg), "--seed", seed, "--out", p(&scenes), "synth", "--n-scenes", n]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    scenes
}

#[test]
fn synth_is_deterministic_and_estimate_recovers_poses() {
    let dir = TempDir::new().unwrap();
    let a = synth(dir.path(), "5", "3", "");
    let first = files_under(&a);
    fs::rename(&a, dir.path().join("first")).unwrap();
    let again = synth(dir.path(), "5", "3", "");
    assert_eq!(first, files_under(&again));
    let other = synth(dir.path(), "6", "3", "");
    assert_ne!(first, files_under(&other));

    let scene = again.join("scene_0000");
    let out = run(&["estimate", "--scene", p(&scene)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(scene.join(io::POSE_FILE)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["diagnostics"]["gt"]["add"].as_f64().unwrap() < 0.1 * 0.15);
    let est = io::read_pose(&scene.join(io::POSE_FILE)).unwrap();
    let gt = io::read_pose(&scene.join(io::GT_POSE_FILE)).unwrap();
    assert!(est.rotation_error(&gt) < 0.05);

    // All confidences zero: no keypoint gets a vote.
    let preds = scene.join(io::PREDICTIONS_FILE);
    let zeroed: String = fs::read_to_string(&preds)
        .unwrap()
        .lines()
        .map(|l| {
            let mut rec: serde_json::Value = serde_json::from_str(l).unwrap();
            rec["conf"] = serde_json::json!(0.0);
            format!("{rec}\n")
        })
        .collect();
    fs::write(&preds, zeroed).unwrap();
    assert_eq!(code(&run(&["--out", p(&dir.path().join("x.json")), "estimate", "--scene", p(&scene)])), 4);

    fs::remove_file(&preds).unwrap();
    assert_eq!(code(&run(&["estimate", "--scene", p(&scene)])), 2);
}

#[test]
fn batch_estimate_and_eval() {
    let dir = TempDir::new().unwrap();
    let scenes = synth(dir.path(), "11", "50", ", \"occlusion_fraction\": 0.2");
    let poses = dir.path().join("poses");
    let out = run(&["--out", p(&poses), "estimate", "--scene", p(&scenes)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).trim(), "50");
    let summary = fs::read_to_string(poses.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 51);
    assert!(summary.lines().skip(1).all(|l| l.contains(",ok,")));

    let report = dir.path().join("report");
    let out = run(&[
        "--out",
        p(&report),
        "eval",
        "--pred-dir",
        p(&poses),
        "--gt-dir",
        p(&scenes),
        "--mesh",
        "builtin:l_bracket",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(report.join("eval.csv")).unwrap();
    assert_eq!(csv, stdout(&out));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "l_bracket");
    assert_eq!(row[1], "50");
    assert_eq!(row[4].parse::<f64>().unwrap(), 1.0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(report.join("eval.json")).unwrap()).unwrap();
    assert_eq!(json[0]["acc@0.1d"], 1.0);
}

#[test]
fn eval_counts_half_correct() {
    let dir = TempDir::new().unwrap();
    let (pred, gt) = (dir.path().join("pred"), dir.path().join("gt"));
    fs::create_dir_all(&pred).unwrap();
    fs::create_dir_all(&gt).unwrap();
    let truth = RigidPose::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), 0.3, Vec3::new(0.0, 0.0, 0.6));
    let off = RigidPose::from_translation(Vec3::new(0.5, 0.0, 0.0)).compose(&truth);
    for (name, est) in [("a", truth), ("b", off)] {
        io::write_pose(&gt.join(format!("{name}.json")), &truth, None).unwrap();
        io::write_pose(&pred.join(format!("{name}.json")), &est, None).unwrap();
    }
    let out = run(&["eval", "--pred-dir", p(&pred), "--gt-dir", p(&gt), "--mesh", "builtin:icosphere"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().nth(1).unwrap().ends_with(",0.500000"), "{}", stdout(&out));

    fs::remove_file(gt.join("b.json")).unwrap();
    assert_eq!(code(&run(&["eval", "--pred-dir", p(&pred), "--gt-dir", p(&gt), "--mesh", "builtin:icosphere"])), 2);
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&run(&["eval", "--pred-dir", p(&empty), "--gt-dir", p(&gt), "--mesh", "builtin:cube"])), 3);
}

#[test]
fn e2e_trials_write_reports() {
    let dir = TempDir::new().unwrap();
    let run_once = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = run(&[
            "--seed",
            "3",
            "--out",
            p(&out_dir),
            "e2e",
            "--mesh",
            "builtin:l_bracket",
            "--trials",
            "4",
            "--noise-rel",
            "0.002",
            "--occlusion",
            "0.4",
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let a = run_once("a");
    let b = run_once("b");
    for f in ["trials.csv", "eval.csv", "eval.json", "angles_0000.png", "angles_0000_mask.png", "pose_0003.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let trials = fs::read_to_string(a.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 5);
}
