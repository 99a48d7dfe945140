//! Static 3-d tree for exact nearest-neighbor queries.

use crate::geometry::Vec3;

/// Points reordered into an implicit balanced tree: the median of every
/// subrange is its node, split axis cycling x, y, z with depth.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut points = points.to_vec();
        build(&mut points, 0);
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance from `q` to its nearest stored point.
    pub fn nearest_distance_squared(&self, q: &Vec3) -> Option<f64> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        search(&self.points, 0, q, &mut best);
        Some(best)
    }
}

fn build(points: &mut [Vec3], depth: usize) {
    if points.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = points.len() / 2;
    points.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
    let (left, rest) = points.split_at_mut(mid);
    build(left, depth + 1);
    build(&mut rest[1..], depth + 1);
}

fn search(points: &[Vec3], depth: usize, q: &Vec3, best: &mut f64) {
    if points.is_empty() {
        return;
    }
    let mid = points.len() / 2;
    let node = &points[mid];
    let d = (node - q).norm_squared();
    if d < *best {
        *best = d;
    }
    let axis = depth % 3;
    let diff = q[axis] - node[axis];
    let (near, far) = if diff < 0.0 {
        (&points[..mid], &points[mid + 1..])
    } else {
        (&points[mid + 1..], &points[..mid])
    };
    search(near, depth + 1, q, best);
    if diff * diff < *best {
        search(far, depth + 1, q, best);
    }
}
