//! Keypoint selection on the object model by farthest point sampling.

use crate::error::{Error, Result};
use crate::geometry::{centroid, TriangleMesh, Vec3};

pub const DEFAULT_KEYPOINT_COUNT: usize = 8;

/// Object-frame voting targets. When `includes_center` is set the last point
/// is the model centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSet {
    pub points: Vec<Vec3>,
    pub includes_center: bool,
}

impl KeypointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Greedy farthest point sampling.
///
/// Starts from the candidate farthest from the centroid and then repeatedly
/// adds the candidate whose distance to the selected set is largest. Ties go
/// to the smallest index. Returns the selected candidate indices in order.
pub fn farthest_point_indices(candidates: &[Vec3], n: usize) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::Empty("no FPS candidates".into()));
    }
    if n == 0 {
        return Err(Error::invalid("FPS count must be positive"));
    }
    if n > candidates.len() {
        return Err(Error::invalid(format!(
            "cannot select {n} keypoints from {} candidates",
            candidates.len()
        )));
    }
    let c = centroid(candidates);
    let first = argmax(candidates.iter().map(|p| (p - c).norm_squared()));
    let mut chosen = Vec::with_capacity(n);
    chosen.push(first);
    let mut radius: Vec<f64> = candidates
        .iter()
        .map(|p| (p - candidates[first]).norm_squared())
        .collect();
    while chosen.len() < n {
        let next = argmax(radius.iter().copied());
        if radius[next] <= 0.0 {
            return Err(Error::Degenerate(format!(
                "only {} distinct candidates, {n} keypoints requested",
                chosen.len()
            )));
        }
        chosen.push(next);
        let q = candidates[next];
        for (r, p) in radius.iter_mut().zip(candidates) {
            *r = r.min((p - q).norm_squared());
        }
    }
    Ok(chosen)
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn farthest_point_sampling(candidates: &[Vec3], n: usize) -> Result<KeypointSet> {
    let idx = farthest_point_indices(candidates, n)?;
    Ok(KeypointSet {
        points: idx.iter().map(|&i| candidates[i]).collect(),
        includes_center: false,
    })
}

/// FPS over the mesh vertices, optionally followed by the vertex centroid.
pub fn select_keypoints(mesh: &TriangleMesh, n: usize, add_center: bool) -> Result<KeypointSet> {
    let mut set = farthest_point_sampling(mesh.vertices(), n)?;
    if add_center {
        let c = mesh.centroid();
        if set.points.iter().any(|p| (p - c).norm() == 0.0) {
            return Err(Error::Degenerate("mesh centroid coincides with a selected keypoint".into()));
        }
        set.points.push(c);
        set.includes_center = true;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshes;
    use rand::{Rng, SeedableRng};

    /// Naive greedy FPS: recomputes every candidate's distance to every
    /// chosen point at each step.
    fn oracle_fps(c: &[Vec3], n: usize) -> Vec<usize> {
        let mean = c.iter().fold(Vec3::zeros(), |a, p| a + p) / c.len() as f64;
        let mut best = 0;
        for i in 0..c.len() {
            if (c[i] - mean).norm_squared() > (c[best] - mean).norm_squared() {
                best = i;
            }
        }
        let mut chosen = vec![best];
        while chosen.len() < n {
            let mut pick = 0;
            let mut pick_d = -1.0;
            for i in 0..c.len() {
                let d = chosen
                    .iter()
                    .map(|&j| (c[i] - c[j]).norm_squared())
                    .fold(f64::INFINITY, f64::min);
                if d > pick_d {
                    pick = i;
                    pick_d = d;
                }
            }
            chosen.push(pick);
        }
        chosen
    }

    #[test]
    fn cube_pair_is_antipodal() {
        let cube = meshes::unit_cube();
        let set = farthest_point_sampling(cube.vertices(), 2).unwrap();
        assert!(((set.points[0] - set.points[1]).norm() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_point_is_farthest_from_centroid() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(5.0, 5.0, 0.0),
        ];
        assert_eq!(farthest_point_indices(&pts, 1).unwrap(), vec![3]);
    }

    #[test]
    fn random_sets_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let pts: Vec<Vec3> = (0..20)
                .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            assert_eq!(farthest_point_indices(&pts, 5).unwrap(), oracle_fps(&pts, 5));
        }
    }

    #[test]
    fn tetrahedron_selects_all_vertices() {
        let tet = meshes::regular_tetrahedron(1.0);
        let mut idx = farthest_point_indices(tet.vertices(), 4).unwrap();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 3]);
    }

    #[test]
    fn cube_center_is_appended() {
        let set = select_keypoints(&meshes::unit_cube(), 8, true).unwrap();
        assert_eq!(set.len(), 9);
        assert!(set.includes_center);
        assert!((set.points[8] - Vec3::new(0.5, 0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn sphere_mesh_matches_oracle() {
        let sphere = meshes::uv_sphere(0.05, 20, 27);
        assert!(sphere.vertices().len() >= 500);
        let got = farthest_point_indices(sphere.vertices(), 8).unwrap();
        assert_eq!(got, oracle_fps(sphere.vertices(), 8));
    }

    #[test]
    fn errors() {
        let pts = vec![Vec3::zeros(), Vec3::x()];
        assert!(farthest_point_indices(&pts, 3).is_err());
        assert!(farthest_point_indices(&[], 1).is_err());
        assert!(farthest_point_indices(&pts, 0).is_err());
        let dup = vec![Vec3::x(); 3];
        assert!(matches!(farthest_point_indices(&dup, 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn insertion_radius_is_monotone() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec3> = (0..300)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let idx = farthest_point_indices(&pts, 16).unwrap();
        let radii: Vec<f64> = (1..idx.len())
            .map(|k| {
                idx[..k]
                    .iter()
                    .map(|&j| (pts[idx[k]] - pts[j]).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        assert!(radii.windows(2).all(|w| w[1] <= w[0]));
        // Min pairwise distance of the first k points equals the k-th radius.
        for k in 2..idx.len() {
            let mut min_pair = f64::INFINITY;
            for a in 0..k {
                for b in a + 1..k {
                    min_pair = min_pair.min((pts[idx[a]] - pts[idx[b]]).norm());
                }
            }
            assert!(min_pair >= radii[k - 1] - 1e-15);
        }
    }
}
