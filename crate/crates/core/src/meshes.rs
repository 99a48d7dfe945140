//! Procedural test meshes.

use std::collections::HashMap;

use crate::geometry::{TriangleMesh, Vec3};

/// Axis-aligned cube spanning `[0, 1]^3`.
pub fn unit_cube() -> TriangleMesh {
    box_mesh(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0))
}

/// Cube of the given edge length centered on the origin.
pub fn cube(edge: f64) -> TriangleMesh {
    let h = edge / 2.0;
    box_mesh(Vec3::new(-h, -h, -h), Vec3::new(h, h, h))
}

fn box_mesh(lo: Vec3, hi: Vec3) -> TriangleMesh {
    let vertices: Vec<Vec3> = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            )
        })
        .collect();
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh::new(vertices, faces).expect("box is valid")
}

pub fn regular_tetrahedron(edge: f64) -> TriangleMesh {
    let s = edge / (2.0 * std::f64::consts::SQRT_2);
    let vertices = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriangleMesh::new(vertices, faces).expect("tetrahedron is valid")
}

/// Subdivided icosahedron projected onto a sphere of the given radius.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    TriangleMesh::new(vertices, faces).expect("icosphere is valid")
}

/// Latitude/longitude sphere with `stacks` rings and `slices` segments.
pub fn uv_sphere(radius: f64, stacks: usize, slices: usize) -> TriangleMesh {
    let mut vertices = vec![Vec3::new(0.0, 0.0, radius)];
    for i in 1..stacks {
        let theta = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / slices as f64;
            vertices.push(radius * Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -radius));
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * slices + (j % slices);
    let mut faces = Vec::new();
    for j in 0..slices {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
        faces.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            faces.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("sphere is valid")
}

/// Asymmetric L-shaped bracket: an L profile in the xy plane with unequal arms,
/// extruded along z. Centered on its bounding-box center.
pub fn l_bracket(long_arm: f64, short_arm: f64, thickness: f64, depth: f64) -> TriangleMesh {
    let profile = [
        (0.0, 0.0),
        (long_arm, 0.0),
        (long_arm, thickness),
        (thickness, thickness),
        (thickness, short_arm),
        (0.0, short_arm),
    ];
    let offset = Vec3::new(long_arm / 2.0, short_arm / 2.0, depth / 2.0);
    let mut vertices = Vec::with_capacity(12);
    for z in [0.0, depth] {
        for &(x, y) in &profile {
            vertices.push(Vec3::new(x, y, z) - offset);
        }
    }
    let mut faces = Vec::new();
    // Caps: the L splits into two convex quads sharing the 0-3 diagonal.
    for quad in [[0, 1, 2, 3], [0, 3, 4, 5]] {
        faces.push([quad[0], quad[2], quad[1]]);
        faces.push([quad[0], quad[3], quad[2]]);
        faces.push([quad[0] + 6, quad[1] + 6, quad[2] + 6]);
        faces.push([quad[0] + 6, quad[2] + 6, quad[3] + 6]);
    }
    for i in 0..6 {
        let j = (i + 1) % 6;
        faces.push([i, j, j + 6]);
        faces.push([i, j + 6, i + 6]);
    }
    TriangleMesh::new(vertices, faces).expect("bracket is valid")
}

/// Built-in meshes at object scale (decimeter), addressed by name.
pub fn builtin(name: &str) -> Option<TriangleMesh> {
    match name {
        "cube" => Some(cube(0.1)),
        "unit_cube" => Some(unit_cube()),
        "icosphere" => Some(icosphere(0.06, 2)),
        "l_bracket" => Some(l_bracket(0.12, 0.08, 0.03, 0.04)),
        "tetrahedron" => Some(regular_tetrahedron(0.1)),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 5] = ["cube", "unit_cube", "icosphere", "l_bracket", "tetrahedron"];
