//! Discrete gradients, the generalized Laplacian `C = ∇ᵀG𝒜∇`, Dirichlet
//! masking and the conjugate-gradient reconstruction of a mapping from its
//! representation.

mod boundary;
mod cg;

use std::sync::Arc;

use nalgebra::{Matrix3, Matrix3x4, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Coordinate, Error, Result};
use crate::mesh::{Mapping, Point, TetMesh};
use crate::qcrep::{build_dilation_matrix, QcRep};
use crate::sparse::{CsrMatrix, SparseMatrix};

pub use boundary::{apply_boundary, BoundaryConditions, MaskedSystems};
pub(crate) use cg::cg_core;
pub use cg::{solve_cg, solve_cg_with_guess, CgOptions, CgReport};

/// Per-tet gradient stencil: `A`, `B`, `C` hold the `∂x`, `∂y`, `∂z`
/// weights of the four local vertices. Row `k` of `X⁻¹` gives local vertex
/// `k + 1`; local vertex 0 takes the negated sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCoefficients {
    pub a: [f64; 4],
    pub b: [f64; 4],
    pub c: [f64; 4],
}

impl GradientCoefficients {
    /// `(Aⁱ, Bⁱ, Cⁱ)` of local vertex `i`.
    pub fn of_vertex(&self, i: usize) -> Vector3<f64> {
        Vector3::new(self.a[i], self.b[i], self.c[i])
    }

    /// The 3×4 operator `∇_T`.
    pub fn matrix(&self) -> Matrix3x4<f64> {
        Matrix3x4::from_fn(|r, c| [self.a, self.b, self.c][r][c])
    }

    /// `∇_T` applied to the four local values.
    pub fn apply(&self, values: [f64; 4]) -> Vector3<f64> {
        let d = |w: &[f64; 4]| w.iter().zip(&values).map(|(x, y)| x * y).sum();
        Vector3::new(d(&self.a), d(&self.b), d(&self.c))
    }
}

pub fn gradient_coefficients(mesh: &TetMesh, t: usize) -> GradientCoefficients {
    coefficients_from_inverse(&inverse_edge_matrix(mesh, t))
}

fn inverse_edge_matrix(mesh: &TetMesh, t: usize) -> Matrix3<f64> {
    // positive volume guarantees X is invertible
    mesh.edge_matrix(t).try_inverse().unwrap_or_else(Matrix3::zeros)
}

fn coefficients_from_inverse(chi: &Matrix3<f64>) -> GradientCoefficients {
    let col = |k: usize| {
        let mut w = [0.0; 4];
        for r in 0..3 {
            w[r + 1] = chi[(r, k)];
        }
        w[0] = -(w[1] + w[2] + w[3]);
        w
    };
    GradientCoefficients {
        a: col(0),
        b: col(1),
        c: col(2),
    }
}

/// Adjugate of `m` in cross-product form: its rows are `c₂×c₃`, `c₃×c₁`,
/// `c₁×c₂` for the columns `cₖ` of `m`. Equals `det(m)·m⁻¹`.
pub fn adjugate_cross_identity(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let det = m.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularMatrix);
    }
    let c = |k: usize| -> Vector3<f64> { m.column(k).into() };
    let rows = [c(1).cross(&c(2)), c(2).cross(&c(0)), c(0).cross(&c(1))];
    Ok(Matrix3::from_fn(|r, k| rows[r][k]))
}

/// `C` together with the factors it was assembled from.
#[derive(Clone, Debug)]
pub struct GeneralizedLaplacian {
    pub matrix: SparseMatrix,
    pub gradients: Vec<GradientCoefficients>,
    pub volumes: Vec<f64>,
    pub dilations: Vec<Matrix3<f64>>,
    tets: Vec<[usize; 4]>,
}

impl GeneralizedLaplacian {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// The sparse `3m×n` operator stacking every `∇_T`.
    pub fn gradient_operator(&self) -> CsrMatrix {
        let n = self.n();
        let rows = self.tets.iter().zip(&self.gradients).flat_map(|(tet, g)| {
            [g.a, g.b, g.c]
                .into_iter()
                .map(move |w| (0..4).map(|k| (tet[k], w[k])).collect::<Vec<_>>())
        });
        CsrMatrix::from_rows(n, rows)
    }

    /// `∇ᵀ G 𝒜 ∇ x` evaluated factor by factor.
    pub fn apply_factored(&self, x: &[f64]) -> Result<Vec<f64>> {
        let grad = self.gradient_operator().mul_vec(x)?;
        let mut out = vec![0.0; self.n()];
        for (t, tet) in self.tets.iter().enumerate() {
            let gx = Vector3::new(grad[3 * t], grad[3 * t + 1], grad[3 * t + 2]);
            let flux = self.dilations[t] * gx * self.volumes[t];
            for (k, &i) in tet.iter().enumerate() {
                out[i] += self.gradients[t].of_vertex(k).dot(&flux);
            }
        }
        Ok(out)
    }

    /// Per-vertex flux `Σ_T Area·n̂·𝒜_T∇_T x = −3·(C x)ᵢ`.
    pub fn flux(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x).into_iter().map(|v| -3.0 * v).collect()
    }
}

/// Gradient stencil, dilation matrix and upper triangle of one element
/// matrix in row-major order.
type Element = (GradientCoefficients, Matrix3<f64>, [f64; 10]);

/// Assembles `C[i][j] = Σ_T Vol(T)·∇ᵢᵀ𝒜_T∇ⱼ`. Element matrices are built in
/// parallel and summed in tet order, so `C` is bitwise symmetric and
/// independent of the thread count.
pub fn assemble(mesh: &TetMesh, rep: &QcRep) -> Result<GeneralizedLaplacian> {
    if rep.len() != mesh.n_tets() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_tets(),
            actual: rep.len(),
        });
    }
    let elements: Vec<Result<Element>> = (0..mesh.n_tets())
        .into_par_iter()
        .map(|t| {
            let a = build_dilation_matrix(rep.get(t)).map_err(|e| e.at_tet(t))?;
            let g = gradient_coefficients(mesh, t);
            let vol = mesh.volume(t);
            let flux: [Vector3<f64>; 4] = std::array::from_fn(|k| a * g.of_vertex(k));
            let mut upper = [0.0; 10];
            let mut idx = 0;
            for p in 0..4 {
                for fq in &flux[p..] {
                    upper[idx] = vol * g.of_vertex(p).dot(fq);
                    idx += 1;
                }
            }
            Ok((g, a, upper))
        })
        .collect();

    let mut triplets = Vec::with_capacity(16 * mesh.n_tets());
    let mut gradients = Vec::with_capacity(mesh.n_tets());
    let mut dilations = Vec::with_capacity(mesh.n_tets());
    for (t, e) in elements.into_iter().enumerate() {
        let (g, a, upper) = e?;
        let tet = mesh.tet(t);
        let mut idx = 0;
        for p in 0..4 {
            for q in p..4 {
                let v = upper[idx];
                idx += 1;
                triplets.push((tet[p], tet[q], v));
                if p != q {
                    triplets.push((tet[q], tet[p], v));
                }
            }
        }
        gradients.push(g);
        dilations.push(a);
    }
    Ok(GeneralizedLaplacian {
        matrix: SparseMatrix::from_triplets(mesh.n_vertices(), triplets),
        gradients,
        volumes: (0..mesh.n_tets()).map(|t| mesh.volume(t)).collect(),
        dilations,
        tets: mesh.tets().to_vec(),
    })
}

/// Reconstructed mapping with solver diagnostics.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub mapping: Mapping,
    pub cg: [CgReport; 3],
    /// Largest `|flux|` over unconstrained vertices and all coordinates.
    pub max_flux_residual: f64,
}

/// Solves the three masked systems for `u`, `v`, `w`. The iteration starts
/// from the source coordinates with constrained entries set to `β`, so
/// constrained vertices are returned exactly.
pub fn reconstruct(
    mesh: Arc<TetMesh>,
    rep: &QcRep,
    bc: &BoundaryConditions,
    opts: &CgOptions,
) -> Result<Reconstruction> {
    bc.validate(mesh.n_vertices())?;
    let lap = assemble(&mesh, rep)?;
    reconstruct_assembled(mesh, &lap, bc, opts)
}

pub fn reconstruct_assembled(
    mesh: Arc<TetMesh>,
    lap: &GeneralizedLaplacian,
    bc: &BoundaryConditions,
    opts: &CgOptions,
) -> Result<Reconstruction> {
    let sys = apply_boundary(&lap.matrix, bc)?;
    let solved: Vec<Result<(Vec<f64>, CgReport)>> = Coordinate::ALL
        .par_iter()
        .map(|&c| {
            let k = c.index();
            let mut guess: Vec<f64> = mesh.vertices().iter().map(|p| p[k]).collect();
            for &(i, beta) in bc.get(c) {
                guess[i] = beta;
            }
            solve_cg_with_guess(&sys.matrices[k], &sys.rhs[k], guess, opts)
        })
        .collect();
    let mut coords: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut reports = Vec::with_capacity(3);
    for s in solved {
        let (x, r) = s?;
        coords.push(x);
        reports.push(r);
    }
    let mut max_flux_residual: f64 = 0.0;
    for (k, x) in coords.iter().enumerate() {
        let flux = lap.flux(x);
        for (i, f) in flux.iter().enumerate() {
            if !sys.constrained[k][i] {
                max_flux_residual = max_flux_residual.max(f.abs());
            }
        }
    }
    let images = (0..mesh.n_vertices())
        .map(|i| Point::new(coords[0][i], coords[1][i], coords[2][i]))
        .collect();
    Ok(Reconstruction {
        mapping: Mapping::new(mesh, images)?,
        cg: reports.try_into().expect("three coordinate solves"),
        max_flux_residual,
    })
}

/// Serializable summary of a [`Reconstruction`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    /// Normalized ℓ² distance to the ground truth, when one is known.
    pub error_l2: Option<f64>,
    pub cg_iters: [usize; 3],
    pub cg_residuals: [f64; 3],
    pub max_flux_residual: f64,
}

impl Reconstruction {
    pub fn report(&self, truth: Option<&Mapping>) -> ReconstructionReport {
        ReconstructionReport {
            error_l2: truth.map(|t| self.mapping.normalized_l2_distance(t)),
            cg_iters: std::array::from_fn(|k| self.cg[k].iterations),
            cg_residuals: std::array::from_fn(|k| self.cg[k].relative_residual),
            max_flux_residual: self.max_flux_residual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cube_mesh, Deformation};
    use crate::qcrep::compute_representation;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_tet(scale: f64) -> TetMesh {
        TetMesh::new(
            vec![
                Point::zeros(),
                Point::new(scale, 0.0, 0.0),
                Point::new(0.0, scale, 0.0),
                Point::new(0.0, 0.0, scale),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn reference_tet_coefficients() {
        let g = gradient_coefficients(&reference_tet(1.0), 0);
        assert_eq!(g.a, [-1.0, 1.0, 0.0, 0.0]);
        assert_eq!(g.b, [-1.0, 0.0, 1.0, 0.0]);
        assert_eq!(g.c, [-1.0, 0.0, 0.0, 1.0]);
        let h = gradient_coefficients(&reference_tet(2.0), 0);
        assert_eq!(h.a, g.a.map(|x| x / 2.0));
    }

    #[test]
    fn gradient_of_coordinate_functions() {
        let m = cube_mesh(2);
        for t in 0..m.n_tets() {
            let g = gradient_coefficients(&m, t);
            let tet = m.tet(t);
            for k in 0..3 {
                let grad = g.apply(tet.map(|i| m.vertex(i)[k]));
                let e = Vector3::ith(k, 1.0);
                assert!((grad - e).abs().max() < 1e-12);
            }
        }
    }

    #[test]
    fn adjugate_examples() {
        assert_eq!(
            adjugate_cross_identity(&Matrix3::identity()).unwrap(),
            Matrix3::identity()
        );
        let d = Matrix3::from_diagonal(&Vector3::new(2.0, 3.0, 4.0));
        assert_eq!(
            adjugate_cross_identity(&d).unwrap(),
            Matrix3::from_diagonal(&Vector3::new(12.0, 8.0, 6.0))
        );
        assert!(adjugate_cross_identity(&Matrix3::zeros()).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let m = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)) + Matrix3::identity() * 3.0;
            let oracle = m.try_inverse().unwrap() * m.determinant();
            assert!((adjugate_cross_identity(&m).unwrap() - oracle).abs().max() < 1e-10);
        }
    }

    #[test]
    fn normal_relation_holds_per_vertex() {
        let m = cube_mesh(2);
        for t in 0..m.n_tets() {
            let g = gradient_coefficients(&m, t);
            let geo = m.geometry(t);
            let mut closure = Vector3::zeros();
            for k in 0..4 {
                let lhs = geo.face_normals[k] * geo.face_areas[k];
                let rhs = g.of_vertex(k) * (-3.0 * geo.volume);
                assert!((lhs - rhs).abs().max() < 1e-12);
                closure += lhs;
            }
            assert!(closure.abs().max() < 1e-12);
        }
    }

    #[test]
    fn reference_element_matrix() {
        let m = reference_tet(1.0);
        let lap = assemble(&m, &QcRep::identity(1)).unwrap();
        let g = gradient_coefficients(&m, 0).matrix();
        let oracle = g.transpose() * g / 6.0;
        assert_eq!(lap.matrix.get(1, 1), 1.0 / 6.0);
        for i in 0..4 {
            for j in 0..4 {
                assert!((lap.matrix.get(i, j) - oracle[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn assembled_matrix_invariants() {
        let mesh = Arc::new(cube_mesh(4));
        let f = Deformation::fixture(0).apply(mesh.clone());
        let rep = compute_representation(&f, false).unwrap();
        let lap = assemble(&mesh, &rep).unwrap();
        let c = &lap.matrix;
        assert!(c.is_symmetric());
        let ones = c.mul_vec(&vec![1.0; c.n()]);
        assert!(ones.iter().all(|v| v.abs() <= 1e-10 * c.max_abs()));
        // dual route through the stored factors
        let x: Vec<f64> = mesh.vertices().iter().map(|p| p.x * p.y - p.z).collect();
        let direct = c.mul_vec(&x);
        let factored = lap.apply_factored(&x).unwrap();
        for (a, b) in direct.iter().zip(&factored) {
            assert!((a - b).abs() < 1e-12 * c.max_abs());
        }
        let dense_g = lap.gradient_operator().to_dense();
        assert_eq!(dense_g.shape(), (3 * mesh.n_tets(), mesh.n_vertices()));
    }

    #[test]
    fn rank_is_n_minus_one() {
        let mesh = Arc::new(cube_mesh(3));
        let rep = compute_representation(&Deformation::fixture(1).apply(mesh.clone()), false).unwrap();
        let dense: DMatrix<f64> = assemble(&mesh, &rep).unwrap().matrix.to_dense();
        let sv = dense.clone().singular_values();
        let tol = sv.max() * 1e-10;
        assert_eq!(sv.iter().filter(|&&s| s > tol).count(), mesh.n_vertices() - 1);
    }

    #[test]
    fn single_pin_makes_the_system_spd() {
        let mesh = Arc::new(cube_mesh(3));
        let lap = assemble(&mesh, &QcRep::identity(mesh.n_tets())).unwrap();
        let bc = BoundaryConditions::pin_vertices(&[5], mesh.vertices());
        let sys = apply_boundary(&lap.matrix, &bc).unwrap();
        for m in &sys.matrices {
            assert!(m.to_dense().cholesky().is_some());
        }
    }

    #[test]
    fn constraining_every_vertex_returns_targets() {
        let mesh = Arc::new(cube_mesh(2));
        let all: Vec<usize> = (0..mesh.n_vertices()).collect();
        let target = Deformation::fixture(2).apply(mesh.clone());
        let bc = BoundaryConditions::pin_vertices(&all, target.images());
        let lap = assemble(&mesh, &QcRep::identity(mesh.n_tets())).unwrap();
        let sys = apply_boundary(&lap.matrix, &bc).unwrap();
        assert_eq!(sys.matrices[0], SparseMatrix::identity(mesh.n_vertices()));
        let r = reconstruct(
            mesh,
            &QcRep::identity(lap.volumes.len()),
            &bc,
            &CgOptions::default(),
        )
        .unwrap();
        assert_eq!(r.mapping.images(), target.images());
    }

    #[test]
    fn masked_solve_matches_dense_oracle() {
        let mesh = Arc::new(cube_mesh(4));
        let f = Deformation::fixture(0).apply(mesh.clone());
        let rep = compute_representation(&f, false).unwrap();
        let lap = assemble(&mesh, &rep).unwrap();
        let bc = BoundaryConditions::cube_faces(&f);
        let sys = apply_boundary(&lap.matrix, &bc).unwrap();
        for k in 0..3 {
            let (x, _) = solve_cg(&sys.matrices[k], &sys.rhs[k], &CgOptions::default()).unwrap();
            let dense = sys.matrices[k].to_dense();
            let oracle = dense
                .lu()
                .solve(&nalgebra::DVector::from_vec(sys.rhs[k].clone()))
                .unwrap();
            for (a, b) in x.iter().zip(oracle.iter()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn affine_maps_are_reproduced() {
        let mesh = Arc::new(cube_mesh(4));
        let a = Matrix3::new(1.2, 0.1, -0.2, 0.0, 0.9, 0.3, 0.1, -0.1, 1.1);
        let b = Vector3::new(0.5, -0.25, 2.0);
        let f = Mapping::from_fn(mesh.clone(), |p| a * p + b);
        let bc = BoundaryConditions::surface(&f);
        let id = reconstruct(
            mesh.clone(),
            &QcRep::identity(mesh.n_tets()),
            &bc,
            &CgOptions::default(),
        )
        .unwrap();
        assert!(id.mapping.normalized_l2_distance(&f) < 1e-10);
        let rep = compute_representation(&f, false).unwrap();
        let r = reconstruct(mesh, &rep, &bc, &CgOptions::default()).unwrap();
        assert!(r.mapping.normalized_l2_distance(&f) < 1e-10);
    }

    #[test]
    fn round_trip_with_face_sliding_conditions() {
        let mesh = Arc::new(cube_mesh(6));
        let f = Deformation::fixture(1).apply(mesh.clone());
        let rep = compute_representation(&f, false).unwrap();
        let bc = BoundaryConditions::cube_faces(&f);
        let r = reconstruct(mesh, &rep, &bc, &CgOptions::default()).unwrap();
        assert!(r.mapping.normalized_l2_distance(&f) < 1e-8);
        for c in Coordinate::ALL {
            for &(i, beta) in bc.get(c) {
                assert_eq!(r.mapping.images()[i][c.index()], beta);
            }
        }
        assert!(r.max_flux_residual < 1e-9);
    }

    #[test]
    fn scaling_the_target_scales_the_solution() {
        let s = 2.5;
        let mesh = Arc::new(cube_mesh(4));
        let def = Deformation::fixture(2);
        let f = def.apply(mesh.clone());
        let sf = Mapping::from_fn(mesh.clone(), |p| def.eval(p) * s);
        let rep = compute_representation(&f, false).unwrap();
        let srep = compute_representation(&sf, false).unwrap();
        for t in 0..mesh.n_tets() {
            let a = build_dilation_matrix(rep.get(t)).unwrap();
            let sa = build_dilation_matrix(srep.get(t)).unwrap();
            assert!((sa - a * s).abs().max() < 1e-10 * s);
        }
        let bc = BoundaryConditions::cube_faces(&sf);
        let r = reconstruct(mesh, &srep, &bc, &CgOptions::default()).unwrap();
        assert!(r.mapping.normalized_l2_distance(&sf) < 1e-8 * s);
    }

    #[test]
    fn missing_constraints_name_the_coordinates() {
        let mesh = Arc::new(cube_mesh(1));
        let err = reconstruct(
            mesh.clone(),
            &QcRep::identity(mesh.n_tets()),
            &BoundaryConditions::default(),
            &CgOptions::default(),
        )
        .unwrap_err();
        assert_eq!(
            err.to_string(),
            "linear system(s) for u, v, w are singular: no constrained vertex"
        );
    }
}
