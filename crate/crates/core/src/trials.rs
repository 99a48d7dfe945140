//! Seeded batches of end-to-end runs and the noise/occlusion robustness grid.

use rayon::prelude::*;

use crate::config::OracleSettings;
use crate::error::Result;
use crate::geometry::{CameraIntrinsics, TriangleMesh};
use crate::keypoints::KeypointSet;
use crate::metrics::PoseErrorReport;
use crate::rng::derive_seed;
use crate::synth::{random_pose, run_e2e, E2eOutcome, E2eParams};

/// Everything shared by the trials of one batch.
#[derive(Debug, Clone)]
pub struct TrialSetup<'a> {
    pub mesh_id: &'a str,
    pub mesh: &'a TriangleMesh,
    pub keypoints: &'a KeypointSet,
    pub intrinsics: CameraIntrinsics,
    pub bandwidth_rel: f64,
    pub symmetric: bool,
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub report: PoseErrorReport,
    pub rotation_error: f64,
    pub translation_error: f64,
    pub visible_points: usize,
}

pub fn trial_seeds(master: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| derive_seed(master, i)).collect()
}

/// One end-to-end run; the trial seed fixes both the pose and the oracle.
pub fn run_trial(setup: &TrialSetup<'_>, oracle: &OracleSettings, seed: u64) -> Result<E2eOutcome> {
    let d = setup.mesh.diameter();
    let gt = random_pose(seed, &setup.intrinsics, d);
    let params = E2eParams {
        mesh_id: setup.mesh_id.to_string(),
        intrinsics: setup.intrinsics,
        oracle: oracle.to_config(d, seed),
        bandwidth: setup.bandwidth_rel * d,
        symmetric: setup.symmetric,
        max_points: setup.max_points,
    };
    run_e2e(setup.mesh, &gt, setup.keypoints, &params)
}

pub fn run_trials(setup: &TrialSetup<'_>, oracle: &OracleSettings, seeds: &[u64]) -> Result<Vec<TrialRecord>> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| {
            let out = run_trial(setup, oracle, seed)?;
            Ok(TrialRecord::from_outcome(index, seed, &out))
        })
        .collect()
}

impl TrialRecord {
    pub fn from_outcome(index: usize, seed: u64, out: &E2eOutcome) -> Self {
        Self {
            index,
            seed,
            report: out.report,
            rotation_error: out.pose.rotation_error(&out.scene.gt_pose),
            translation_error: out.pose.translation_error(&out.scene.gt_pose),
            visible_points: out.visible_points,
        }
    }
}

pub fn format_trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("trial,seed,visible_points,add,adds,threshold,correct_add,correct_adds,rot_err_rad,trans_err_m\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.index,
            r.seed,
            r.visible_points,
            r.report.add,
            r.report.adds,
            r.report.threshold,
            r.report.correct_add,
            r.report.correct_adds,
            r.rotation_error,
            r.translation_error
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub noise_sigma_rel: f64,
    pub occlusion_fraction: f64,
    pub n_seeds: usize,
    pub accuracy: f64,
    /// ADD statistics relative to the diameter.
    pub add_mean_rel: f64,
    pub add_median_rel: f64,
    pub add_max_rel: f64,
}

/// Noise-by-occlusion grid. Every cell reuses the same trial seeds, so cells
/// differ only in the oracle settings.
pub fn robustness_sweep(
    setup: &TrialSetup<'_>,
    noise_levels_rel: &[f64],
    occlusions: &[f64],
    seeds: &[u64],
    use_adds_for_symmetric: bool,
) -> Result<Vec<SweepCell>> {
    let d = setup.mesh.diameter();
    let mut cells = Vec::new();
    for &occ in occlusions {
        for &sigma in noise_levels_rel {
            let oracle = OracleSettings {
                noise_sigma_rel: sigma,
                label_flip_rate: 0.0,
                occlusion_fraction: occ,
            };
            let records = run_trials(setup, &oracle, seeds)?;
            let reports: Vec<PoseErrorReport> = records.iter().map(|r| r.report).collect();
            let accuracy = crate::metrics::accuracy_at_threshold(&reports, use_adds_for_symmetric)?;
            let mut adds: Vec<f64> = reports.iter().map(|r| r.add / d).collect();
            adds.sort_by(f64::total_cmp);
            let n = adds.len();
            let median = if n % 2 == 1 {
                adds[n / 2]
            } else {
                0.5 * (adds[n / 2 - 1] + adds[n / 2])
            };
            cells.push(SweepCell {
                noise_sigma_rel: sigma,
                occlusion_fraction: occ,
                n_seeds: n,
                accuracy,
                add_mean_rel: adds.iter().sum::<f64>() / n as f64,
                add_median_rel: median,
                add_max_rel: adds[n - 1],
            });
        }
    }
    Ok(cells)
}

pub fn format_sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("noise_sigma_rel,occlusion_fraction,n_seeds,acc@0.1d,add_mean_rel,add_median_rel,add_max_rel\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.6e},{:.6e},{:.6e}\n",
            c.noise_sigma_rel, c.occlusion_fraction, c.n_seeds, c.accuracy, c.add_mean_rel, c.add_median_rel, c.add_max_rel
        ));
    }
    out
}

/// Grid used for the shipped robustness table.
pub const SWEEP_NOISE_LEVELS: [f64; 3] = [0.001, 0.005, 0.01];
pub const SWEEP_OCCLUSIONS: [f64; 2] = [0.0, 0.3];
pub const SWEEP_SEEDS: usize = 50;
pub const SWEEP_MASTER_SEED: u64 = 2024;
