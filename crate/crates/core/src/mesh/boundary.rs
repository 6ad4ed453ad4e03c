use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TetMesh;

/// Distance within which a vertex counts as lying on an [`AxisPlane`].
pub const PLANE_TOLERANCE: f64 = 1e-9;

/// The plane `x[axis] == value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisPlane {
    pub axis: usize,
    pub value: f64,
}

impl AxisPlane {
    pub fn new(axis: usize, value: f64) -> AxisPlane {
        assert!(axis < 3, "axis must be 0, 1 or 2");
        AxisPlane { axis, value }
    }

    /// The six faces of the axis-aligned box `[lo, hi]`.
    pub fn box_faces(lo: [f64; 3], hi: [f64; 3]) -> [AxisPlane; 6] {
        [
            AxisPlane::new(0, lo[0]),
            AxisPlane::new(0, hi[0]),
            AxisPlane::new(1, lo[1]),
            AxisPlane::new(1, hi[1]),
            AxisPlane::new(2, lo[2]),
            AxisPlane::new(2, hi[2]),
        ]
    }

    pub fn contains(&self, p: &super::Point) -> bool {
        (p[self.axis] - self.value).abs() <= PLANE_TOLERANCE
    }
}

/// Vertices lying on any of `planes`, sorted.
pub fn boundary_vertices(mesh: &TetMesh, planes: &[AxisPlane]) -> Vec<usize> {
    mesh.vertices()
        .iter()
        .enumerate()
        .filter(|(_, p)| planes.iter().any(|pl| pl.contains(p)))
        .map(|(i, _)| i)
        .collect()
}

/// Triangles that belong to exactly one tet, as sorted vertex triples.
pub fn surface_faces(mesh: &TetMesh) -> Vec<[usize; 3]> {
    let mut count: HashMap<[usize; 3], u32> = HashMap::new();
    for tet in mesh.tets() {
        for skip in 0..4 {
            let mut f = [0usize; 3];
            let mut k = 0;
            for (j, &v) in tet.iter().enumerate() {
                if j != skip {
                    f[k] = v;
                    k += 1;
                }
            }
            f.sort_unstable();
            *count.entry(f).or_default() += 1;
        }
    }
    let mut faces: Vec<_> = count
        .into_iter()
        .filter(|&(_, c)| c == 1)
        .map(|(f, _)| f)
        .collect();
    faces.sort_unstable();
    faces
}

/// Vertices of the topological boundary, sorted.
pub fn surface_vertices(mesh: &TetMesh) -> Vec<usize> {
    let mut on = vec![false; mesh.n_vertices()];
    for f in surface_faces(mesh) {
        for v in f {
            on[v] = true;
        }
    }
    (0..on.len()).filter(|&i| on[i]).collect()
}
