//! Tetrahedral meshes and piecewise-linear mappings between them.
//!
//! A [`TetMesh`] is immutable once built; its per-tet geometry (volumes,
//! face areas and outward face normals) is computed eagerly so downstream
//! passes never recompute it.
//!
//! Reconstruction assumes the mesh is connected and simply connected;
//! neither property is verified.

mod boundary;
mod json;
pub mod tetgen;

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use boundary::{boundary_vertices, surface_faces, surface_vertices, AxisPlane};
pub use json::MeshDocument;
pub use tetgen::{load_mapping, load_tetgen, save_tetgen};

pub type Point = Vector3<f64>;

/// A degenerate tet has `Vol(T) <= DEGENERACY * diag³` where `diag` is the
/// bounding-box diagonal of the mesh.
pub const DEGENERACY: f64 = 1e-14;

/// Local vertex indices of the face opposite each local vertex. The order
/// is irrelevant for the cached quantities; normals are oriented outward
/// explicitly.
const OPPOSITE_FACE: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Clone, Debug, PartialEq)]
pub struct TetGeometry {
    pub volume: f64,
    /// `Area(T∖i)` for local vertex `i`.
    pub face_areas: [f64; 4],
    /// Outward unit normal of the face opposite local vertex `i`.
    pub face_normals: [Point; 4],
}

#[derive(Clone, Debug)]
pub struct TetMesh {
    vertices: Vec<Point>,
    tets: Vec<[usize; 4]>,
    geometry: Vec<TetGeometry>,
    star_offsets: Vec<usize>,
    star: Vec<usize>,
    repaired: Vec<usize>,
}

impl TetMesh {
    /// Validates and builds a mesh. Negatively oriented tets are repaired by
    /// swapping their second and third vertex; the repaired tet indices are
    /// available from [`TetMesh::repaired_tets`].
    pub fn new(vertices: Vec<Point>, mut tets: Vec<[usize; 4]>) -> Result<TetMesh> {
        let n = vertices.len();
        for (t, tet) in tets.iter().enumerate() {
            for &i in tet {
                if i >= n {
                    return Err(Error::IndexOutOfRange {
                        tet: t,
                        index: i,
                        count: n,
                    });
                }
            }
            for a in 0..4 {
                for b in a + 1..4 {
                    if tet[a] == tet[b] {
                        return Err(Error::RepeatedIndex { tet: t });
                    }
                }
            }
        }
        if let Some(i) = vertices
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(Error::InvalidArgument(format!(
                "vertex {i} has a non-finite coordinate"
            )));
        }

        let diag = bounding_box(&vertices)
            .map(|(lo, hi)| (hi - lo).norm())
            .unwrap_or(0.0);
        let tolerance = DEGENERACY * diag.powi(3);
        let mut repaired = Vec::new();
        for (t, tet) in tets.iter_mut().enumerate() {
            let vol = signed_volume(&vertices, tet);
            if vol.abs() <= tolerance {
                return Err(Error::DegenerateTet {
                    tet: t,
                    volume: vol.abs(),
                    tolerance,
                });
            }
            if vol < 0.0 {
                tet.swap(1, 2);
                repaired.push(t);
            }
        }

        let mut counts = vec![0usize; n + 1];
        for tet in &tets {
            for &i in tet {
                counts[i + 1] += 1;
            }
        }
        if let Some(i) = (0..n).find(|&i| counts[i + 1] == 0) {
            return Err(Error::UnreferencedVertex(i));
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let star_offsets = counts;
        let mut fill = star_offsets.clone();
        let mut star = vec![0usize; star_offsets[n]];
        for (t, tet) in tets.iter().enumerate() {
            for &i in tet {
                star[fill[i]] = t;
                fill[i] += 1;
            }
        }

        let geometry = tets.par_iter().map(|tet| tet_geometry(&vertices, tet)).collect();

        Ok(TetMesh {
            vertices,
            tets,
            geometry,
            star_offsets,
            star,
            repaired,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Point {
        &self.vertices[i]
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn tet(&self, t: usize) -> [usize; 4] {
        self.tets[t]
    }

    pub fn geometry(&self, t: usize) -> &TetGeometry {
        &self.geometry[t]
    }

    pub fn volume(&self, t: usize) -> f64 {
        self.geometry[t].volume
    }

    pub fn total_volume(&self) -> f64 {
        self.geometry.iter().map(|g| g.volume).sum()
    }

    /// Tets containing vertex `i`, in increasing order.
    pub fn star(&self, i: usize) -> &[usize] {
        &self.star[self.star_offsets[i]..self.star_offsets[i + 1]]
    }

    /// Tets whose orientation was repaired while building the mesh.
    pub fn repaired_tets(&self) -> &[usize] {
        &self.repaired
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        bounding_box(&self.vertices).unwrap_or((Point::zeros(), Point::zeros()))
    }

    /// Edge matrix `X = [p₂−p₁, p₃−p₁, p₄−p₁]` of tet `t`.
    pub fn edge_matrix(&self, t: usize) -> Matrix3<f64> {
        edge_matrix(&self.vertices, &self.tets[t])
    }

    /// 64-bit content hash over the little-endian bytes of the vertex
    /// coordinates and tet indices.
    pub fn content_hash(&self) -> u64 {
        let mut h = Sha256::new();
        h.update((self.vertices.len() as u64).to_le_bytes());
        for p in &self.vertices {
            for c in p.iter() {
                h.update(c.to_le_bytes());
            }
        }
        h.update((self.tets.len() as u64).to_le_bytes());
        for tet in &self.tets {
            for &i in tet {
                h.update((i as u64).to_le_bytes());
            }
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

fn bounding_box(points: &[Point]) -> Option<(Point, Point)> {
    let first = points.first()?;
    Some(
        points
            .iter()
            .fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p))),
    )
}

fn edge_matrix(vertices: &[Point], tet: &[usize; 4]) -> Matrix3<f64> {
    let p0 = vertices[tet[0]];
    Matrix3::from_columns(&[
        vertices[tet[1]] - p0,
        vertices[tet[2]] - p0,
        vertices[tet[3]] - p0,
    ])
}

fn signed_volume(vertices: &[Point], tet: &[usize; 4]) -> f64 {
    let p0 = vertices[tet[0]];
    let a = vertices[tet[1]] - p0;
    let b = vertices[tet[2]] - p0;
    let c = vertices[tet[3]] - p0;
    a.cross(&b).dot(&c) / 6.0
}

fn tet_geometry(vertices: &[Point], tet: &[usize; 4]) -> TetGeometry {
    let volume = signed_volume(vertices, tet);
    let mut face_areas = [0.0; 4];
    let mut face_normals = [Point::zeros(); 4];
    for (k, face) in OPPOSITE_FACE.iter().enumerate() {
        let a = vertices[tet[face[0]]];
        let b = vertices[tet[face[1]]];
        let c = vertices[tet[face[2]]];
        let mut n = (b - a).cross(&(c - a));
        let twice_area = n.norm();
        if (vertices[tet[k]] - a).dot(&n) > 0.0 {
            n = -n;
        }
        face_areas[k] = 0.5 * twice_area;
        face_normals[k] = n / twice_area;
    }
    TetGeometry {
        volume,
        face_areas,
        face_normals,
    }
}

/// A piecewise-linear map given by the image of every source vertex.
#[derive(Clone, Debug)]
pub struct Mapping {
    source: Arc<TetMesh>,
    images: Vec<Point>,
}

impl Mapping {
    pub fn new(source: Arc<TetMesh>, images: Vec<Point>) -> Result<Mapping> {
        if images.len() != source.n_vertices() {
            return Err(Error::ImageCountMismatch {
                images: images.len(),
                vertices: source.n_vertices(),
            });
        }
        Ok(Mapping { source, images })
    }

    pub fn identity(source: Arc<TetMesh>) -> Mapping {
        let images = source.vertices().to_vec();
        Mapping { source, images }
    }

    pub fn from_fn(source: Arc<TetMesh>, f: impl Fn(&Point) -> Point) -> Mapping {
        let images = source.vertices().iter().map(f).collect();
        Mapping { source, images }
    }

    pub fn source(&self) -> &Arc<TetMesh> {
        &self.source
    }

    pub fn images(&self) -> &[Point] {
        &self.images
    }

    pub fn into_images(self) -> Vec<Point> {
        self.images
    }

    /// `J_f(T) = Y X⁻¹`.
    pub fn jacobian(&self, t: usize) -> Matrix3<f64> {
        let x = self.source.edge_matrix(t);
        let y = edge_matrix(&self.images, &self.source.tets[t]);
        // positive volume guarantees X is invertible
        let x_inv = x.try_inverse().unwrap_or_else(Matrix3::zeros);
        y * x_inv
    }

    /// Tets on which `det J_f(T) <= 0`, in increasing order.
    pub fn folded_tets(&self) -> Vec<usize> {
        let tets = &self.source.tets;
        (0..tets.len())
            .into_par_iter()
            .filter(|&t| signed_volume(&self.images, &tets[t]) <= 0.0)
            .collect()
    }

    /// Checks `det J_f(T) > 0` on every tet.
    pub fn check_diffeomorphic(&self) -> Result<()> {
        let folded = self.folded_tets();
        if folded.is_empty() {
            Ok(())
        } else {
            Err(Error::NonDiffeomorphic { tets: folded })
        }
    }

    /// `‖f − g‖₂ / n` over all stacked image coordinates.
    pub fn normalized_l2_distance(&self, other: &Mapping) -> f64 {
        normalized_l2(&self.images, &other.images)
    }

    /// Mean over vertices of the squared Euclidean distance between images.
    pub fn mean_squared_distance(&self, other: &Mapping) -> f64 {
        mean_squared(&self.images, &other.images)
    }
}

pub fn normalized_l2(a: &[Point], b: &[Point]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let sq: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum();
    sq.sqrt() / a.len() as f64
}

pub fn mean_squared(a: &[Point], b: &[Point]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let sq: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum();
    sq / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn reference_tet() -> TetMesh {
        TetMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn reference_tet_volume() {
        let m = reference_tet();
        assert_eq!(m.volume(0), 1.0 / 6.0);
        assert!(m.repaired_tets().is_empty());
        assert_eq!(m.star(2), &[0]);
    }

    #[test]
    fn orientation_is_repaired() {
        let m = TetMesh::new(reference_tet().vertices().to_vec(), vec![[0, 2, 1, 3]]).unwrap();
        assert_eq!(m.tet(0), [0, 1, 2, 3]);
        assert_eq!(m.volume(0), 1.0 / 6.0);
        assert_eq!(m.repaired_tets(), &[0]);
    }

    #[test]
    fn rejects_bad_tets() {
        let v = reference_tet().vertices().to_vec();
        assert!(matches!(
            TetMesh::new(v.clone(), vec![[0, 1, 2, 4]]),
            Err(Error::IndexOutOfRange { index: 4, .. })
        ));
        assert!(matches!(
            TetMesh::new(v.clone(), vec![[0, 1, 1, 3]]),
            Err(Error::RepeatedIndex { tet: 0 })
        ));
        let mut flat = v.clone();
        flat[3] = Point::new(0.3, 0.3, 0.0);
        assert!(matches!(
            TetMesh::new(flat, vec![[0, 1, 2, 3]]),
            Err(Error::DegenerateTet { tet: 0, .. })
        ));
        let mut extra = v;
        extra.push(Point::new(5.0, 5.0, 5.0));
        assert!(matches!(
            TetMesh::new(extra, vec![[0, 1, 2, 3]]),
            Err(Error::UnreferencedVertex(4))
        ));
    }

    #[test]
    fn face_normals_point_outward_and_close() {
        let m = reference_tet();
        let g = m.geometry(0);
        // face opposite the origin has normal (1,1,1)/√3
        let s = 1.0 / 3f64.sqrt();
        assert!((g.face_normals[0] - Point::new(s, s, s)).norm() < 1e-15);
        assert!((g.face_normals[1] - Point::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        let flux: Point = (0..4).map(|k| g.face_normals[k] * g.face_areas[k]).sum();
        assert!(flux.norm() < 1e-15);
    }

    #[test]
    fn jacobian_of_simple_maps() {
        let m = Arc::new(reference_tet());
        let id = Mapping::identity(m.clone());
        assert_eq!(id.jacobian(0), Matrix3::identity());
        let double = Mapping::from_fn(m, |p| p * 2.0);
        assert!((double.jacobian(0) - Matrix3::identity() * 2.0).abs().max() < 1e-15);
    }

    #[test]
    fn image_count_is_checked() {
        let m = Arc::new(reference_tet());
        assert!(matches!(
            Mapping::new(m, vec![Point::zeros(); 3]),
            Err(Error::ImageCountMismatch {
                images: 3,
                vertices: 4
            })
        ));
    }
}
