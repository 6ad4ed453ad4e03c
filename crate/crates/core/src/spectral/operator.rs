use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TetMesh;
use crate::sparse::SparseMatrix;

/// `sin θ` below which a dihedral angle counts as 0 or π.
pub const DIHEDRAL_TOLERANCE: f64 = 1e-12;

/// The six edges of a tet as local index pairs, each followed by its
/// opposite edge.
const EDGES: [([usize; 2], [usize; 2]); 6] = [
    ([0, 1], [2, 3]),
    ([0, 2], [1, 3]),
    ([0, 3], [1, 2]),
    ([1, 2], [0, 3]),
    ([1, 3], [0, 2]),
    ([2, 3], [0, 1]),
];

/// Cotangent stiffness `L` (off-diagonal `−ωᵢⱼ`, diagonal the negated row
/// sum) and lumped mass `Mᵢᵢ = ¼ Σ_{T∋i} Vol(T)`.
#[derive(Clone, Debug)]
pub struct LaplaceBeltrami {
    pub stiffness: SparseMatrix,
    pub mass: Vec<f64>,
    pub mesh_hash: u64,
}

impl LaplaceBeltrami {
    pub fn n(&self) -> usize {
        self.mass.len()
    }

    /// `ωᵢⱼ` for `i ≠ j`; zero when `(i, j)` is not an edge.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        -self.stiffness.get(i, j)
    }
}

/// Interior dihedral angle cotangent at the edge `(k, l)` of the tet whose
/// other vertices are `i` and `j`. `None` when the angle is within
/// [`DIHEDRAL_TOLERANCE`] of 0 or π.
pub(crate) fn dihedral_cot(
    pk: &crate::Point,
    pl: &crate::Point,
    pi: &crate::Point,
    pj: &crate::Point,
) -> Option<f64> {
    let e = (pl - pk).normalize();
    let a = pi - pk;
    let b = pj - pk;
    let u = a - e * e.dot(&a);
    let v = b - e * e.dot(&b);
    let sin = u.cross(&v).norm();
    if !(sin > DIHEDRAL_TOLERANCE * u.norm() * v.norm()) {
        return None;
    }
    Some(u.dot(&v) / sin)
}

/// `ωᵢⱼ = (1/6) Σ_T ℓ_kl · cot θ_kl`, where `(k, l)` is the edge of `T`
/// opposite `(i, j)` and `θ_kl` the interior dihedral angle there.
pub fn build_laplace_beltrami(mesh: &TetMesh) -> Result<LaplaceBeltrami> {
    let per_tet: Vec<Result<[f64; 6]>> = (0..mesh.n_tets())
        .into_par_iter()
        .map(|t| {
            let tet = mesh.tet(t);
            let p = tet.map(|i| *mesh.vertex(i));
            let mut w = [0.0; 6];
            for (e, ([i, j], [k, l])) in EDGES.iter().enumerate() {
                let cot = dihedral_cot(&p[*k], &p[*l], &p[*i], &p[*j]).ok_or(Error::DegenerateDihedral {
                    tet: t,
                    a: tet[*k],
                    b: tet[*l],
                })?;
                w[e] = (p[*l] - p[*k]).norm() * cot / 6.0;
            }
            Ok(w)
        })
        .collect();
    let mut triplets = Vec::with_capacity(12 * mesh.n_tets());
    for (t, w) in per_tet.into_iter().enumerate() {
        let w = w?;
        let tet = mesh.tet(t);
        for (e, ([i, j], _)) in EDGES.iter().enumerate() {
            triplets.push((tet[*i], tet[*j], -w[e]));
            triplets.push((tet[*j], tet[*i], -w[e]));
        }
    }
    let mut stiffness = SparseMatrix::from_triplets(mesh.n_vertices(), triplets);
    stiffness.set_diag_to_negated_row_sums();
    let mass = (0..mesh.n_vertices())
        .map(|i| 0.25 * mesh.star(i).iter().map(|&t| mesh.volume(t)).sum::<f64>())
        .collect();
    Ok(LaplaceBeltrami {
        stiffness,
        mass,
        mesh_hash: mesh.content_hash(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::cube_mesh;
    use crate::lbs3d::assemble;
    use crate::mesh::Point;
    use crate::qcrep::QcRep;

    fn regular_tet() -> TetMesh {
        let s = 1.0 / 2f64.sqrt();
        TetMesh::new(
            vec![
                Point::new(1.0, 1.0, 1.0) * s / 2.0,
                Point::new(1.0, -1.0, -1.0) * s / 2.0,
                Point::new(-1.0, 1.0, -1.0) * s / 2.0,
                Point::new(-1.0, -1.0, 1.0) * s / 2.0,
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn regular_tet_edge_weight() {
        let m = regular_tet();
        assert!(((m.vertex(0) - m.vertex(1)).norm() - 1.0).abs() < 1e-15);
        let lb = build_laplace_beltrami(&m).unwrap();
        // dihedral angle arccos(1/3), cot = 1/(2√2)
        let expected = (1f64 / 3.0).acos().tan().recip() / 6.0;
        assert!((expected - 1.0 / (12.0 * 2f64.sqrt())).abs() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((lb.weight(i, j) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn reference_tet_mass() {
        let m = TetMesh::new(
            vec![Point::zeros(), Point::x(), Point::y(), Point::z()],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        let lb = build_laplace_beltrami(&m).unwrap();
        assert_eq!(lb.mass, vec![1.0 / 24.0; 4]);
    }

    #[test]
    fn constants_are_annihilated_exactly() {
        let m = cube_mesh(4);
        let lb = build_laplace_beltrami(&m).unwrap();
        assert!(lb
            .stiffness
            .mul_vec(&vec![1.0; m.n_vertices()])
            .iter()
            .all(|&v| v == 0.0));
        assert!(lb.stiffness.is_symmetric());
        assert!((lb.mass.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(lb.mass.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn matches_linear_finite_element_stiffness() {
        let m = cube_mesh(3);
        let lb = build_laplace_beltrami(&m).unwrap();
        let fem = assemble(&m, &QcRep::identity(m.n_tets())).unwrap().matrix;
        for i in 0..m.n_vertices() {
            for j in 0..m.n_vertices() {
                let a = lb.stiffness.get(i, j);
                let b = fem.get(i, j);
                assert!((a - b).abs() < 1e-12, "({i}, {j}): {a} vs {b}");
                if i != j && a != 0.0 {
                    assert!(m.star(i).iter().any(|t| m.tet(*t).contains(&j)));
                }
            }
        }
    }

    #[test]
    fn flat_tet_is_rejected() {
        let cot = dihedral_cot(&Point::zeros(), &Point::x(), &Point::y(), &(Point::y() * 2.0));
        assert!(cot.is_none());
    }
}
