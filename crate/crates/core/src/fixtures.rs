//! Deterministic test meshes and smooth fold-free deformations of the unit
//! cube. These back the bundled acceptance cases and the CLI examples.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::mesh::{Mapping, Point, TetMesh};

/// Unit cube split into `divisions³` sub-cubes of six tets each (Kuhn
/// subdivision), `(divisions + 1)³` vertices, all tets positively oriented.
pub fn cube_mesh(divisions: usize) -> TetMesh {
    box_mesh(divisions, [0.0; 3], [1.0; 3])
}

pub fn box_mesh(divisions: usize, lo: [f64; 3], hi: [f64; 3]) -> TetMesh {
    assert!(divisions > 0);
    let d = divisions;
    let s = d + 1;
    let idx = |i: usize, j: usize, k: usize| i + s * (j + s * k);
    let mut vertices = Vec::with_capacity(s * s * s);
    for k in 0..s {
        for j in 0..s {
            for i in 0..s {
                let t = [i, j, k].map(|c| c as f64 / d as f64);
                vertices.push(Point::new(
                    lo[0] + (hi[0] - lo[0]) * t[0],
                    lo[1] + (hi[1] - lo[1]) * t[1],
                    lo[2] + (hi[2] - lo[2]) * t[2],
                ));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * d * d * d);
    for k in 0..d {
        for j in 0..d {
            for i in 0..d {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [idx(c[0], c[1], c[2]); 4];
                    for (step, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[step + 1] = idx(c[0], c[1], c[2]);
                    }
                    let p0 = vertices[tet[0]];
                    let vol = (vertices[tet[1]] - p0)
                        .cross(&(vertices[tet[2]] - p0))
                        .dot(&(vertices[tet[3]] - p0));
                    if vol < 0.0 {
                        tet.swap(1, 2);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    TetMesh::new(vertices, tets).expect("box mesh is valid")
}

/// `f(p) = p + A·(x(1−x)·φ₁(y,z), y(1−y)·φ₂(x,z), z(1−z)·φ₃(x,y))` with
/// `φ = sin(π(a·s + b·t) + c)`. Each face of the unit cube is mapped into
/// its own plane, so the cube-face sliding boundary conditions hold
/// exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deformation {
    pub amplitude: f64,
    /// `(a, b, c)` for each of the three components.
    pub modes: [[f64; 3]; 3],
}

impl Deformation {
    /// One of three bundled deformations, selected by `which % 3`.
    pub fn fixture(which: usize) -> Deformation {
        match which % 3 {
            0 => Deformation {
                amplitude: 0.12,
                modes: [[1.0, 1.0, 0.3], [1.0, -1.0, 1.1], [2.0, 0.5, -0.4]],
            },
            1 => Deformation {
                amplitude: 0.15,
                modes: [[0.5, 2.0, 0.0], [1.5, 1.0, 0.7], [1.0, 1.0, 2.0]],
            },
            _ => Deformation {
                amplitude: 0.10,
                modes: [[2.0, 1.0, 1.3], [0.5, 0.5, -0.9], [1.0, 2.0, 0.2]],
            },
        }
    }

    /// A gentle deformation for keyframe interpolation tests.
    pub fn mild() -> Deformation {
        Deformation {
            amplitude: 0.06,
            modes: [[1.0, 0.0, 0.5], [0.0, 1.0, -0.5], [1.0, 1.0, 0.0]],
        }
    }

    pub fn scaled(self, factor: f64) -> Deformation {
        Deformation {
            amplitude: self.amplitude * factor,
            ..self
        }
    }

    pub fn eval(&self, p: &Point) -> Point {
        let phi = |m: &[f64; 3], s: f64, t: f64| (PI * (m[0] * s + m[1] * t) + m[2]).sin();
        let a = self.amplitude;
        Point::new(
            p.x + a * p.x * (1.0 - p.x) * phi(&self.modes[0], p.y, p.z),
            p.y + a * p.y * (1.0 - p.y) * phi(&self.modes[1], p.x, p.z),
            p.z + a * p.z * (1.0 - p.z) * phi(&self.modes[2], p.x, p.y),
        )
    }

    pub fn apply(&self, mesh: Arc<TetMesh>) -> Mapping {
        Mapping::from_fn(mesh, |p| self.eval(p))
    }
}

/// The three reconstruction cases: (grid divisions, deformation). Vertex
/// counts are 1000, 2197 and 8000.
pub fn reconstruction_cases() -> [(usize, Deformation); 3] {
    [
        (9, Deformation::fixture(0)),
        (12, Deformation::fixture(1)),
        (19, Deformation::fixture(2)),
    ]
}
