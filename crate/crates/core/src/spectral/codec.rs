use std::sync::Arc;

use rayon::prelude::*;

use super::eigen::Spectrum;
use crate::binfmt::{Reader, Writer};
use crate::error::{Coordinate, Error, Result};
use crate::lbs3d::{reconstruct, BoundaryConditions, CgOptions, Reconstruction};
use crate::linalg::{recompose, sym_eigen3};
use crate::mesh::{Mapping, TetMesh};
use crate::qcrep::{compute_representation, matrix_from_q, q_from_matrix, QcRep};

/// Eigenvalue floor applied to decompressed stretch tensors.
pub const SPD_FLOOR: f64 = 1e-6;

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// `ξᵢ = fᵀMνᵢ` for every pair of the spectrum.
pub fn project(spectrum: &Spectrum, f: &[f64]) -> Result<Vec<f64>> {
    check_len(spectrum.n(), f.len())?;
    let mf: Vec<f64> = f.iter().zip(&spectrum.mass).map(|(a, m)| a * m).collect();
    Ok(spectrum
        .vectors
        .par_iter()
        .map(|nu| mf.iter().zip(nu).map(|(a, b)| a * b).sum())
        .collect())
}

/// `Σᵢ ξᵢνᵢ` over the given coefficients.
pub fn synthesize(spectrum: &Spectrum, xi: &[f64]) -> Result<Vec<f64>> {
    if xi.len() > spectrum.k() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.k(),
            actual: xi.len(),
        });
    }
    let mut f = vec![0.0; spectrum.n()];
    for (c, nu) in xi.iter().zip(&spectrum.vectors) {
        for (a, b) in f.iter_mut().zip(nu) {
            *a += c * b;
        }
    }
    Ok(f)
}

/// Volume-weighted average over the tets around each vertex.
pub fn tet_to_vertex(mesh: &TetMesh, g: &[f64]) -> Result<Vec<f64>> {
    check_len(mesh.n_tets(), g.len())?;
    Ok((0..mesh.n_vertices())
        .map(|i| {
            let mut num = 0.0;
            let mut den = 0.0;
            for &t in mesh.star(i) {
                num += mesh.volume(t) * g[t];
                den += mesh.volume(t);
            }
            num / den
        })
        .collect())
}

/// Mean of the four vertex values of each tet.
pub fn vertex_to_tet(mesh: &TetMesh, f: &[f64]) -> Result<Vec<f64>> {
    check_len(mesh.n_vertices(), f.len())?;
    Ok(mesh
        .tets()
        .iter()
        .map(|tet| tet.iter().map(|&i| f[i]).sum::<f64>() / 4.0)
        .collect())
}

/// `Σ_{i>T} ξᵢ²` for `T = 0..=ξ.len()`, accumulated from the tail so the
/// sequence is non-increasing in floating point.
pub fn truncation_errors(xi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; xi.len() + 1];
    for t in (0..xi.len()).rev() {
        out[t] = out[t + 1] + xi[t] * xi[t];
    }
    out
}

/// Stored coefficients relative to the raw vertex coordinates: `6T / 3n`.
pub fn storage_ratio(threshold: usize, n_vertices: usize) -> f64 {
    (6 * threshold) as f64 / (3 * n_vertices) as f64
}

/// Truncated spectral coefficients of the six representation components.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedMapping {
    pub mesh_hash: u64,
    pub boundary: BoundaryConditions,
    /// `coefficients[c]` has length `T` for every component `c`.
    pub coefficients: [Vec<f64>; 6],
}

const MAGIC: &[u8; 4] = b"QCZ3";
const VERSION: u32 = 1;

impl CompressedMapping {
    pub fn threshold(&self) -> usize {
        self.coefficients[0].len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.u64(self.mesh_hash);
        w.u64(self.threshold() as u64);
        for c in Coordinate::ALL {
            let entries = self.boundary.get(c);
            w.u64(entries.len() as u64);
            for &(i, beta) in entries {
                w.u64(i as u64);
                w.f64(beta);
            }
        }
        for xi in &self.coefficients {
            w.f64s(xi);
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<CompressedMapping> {
        let mut r = Reader::open("QCZ3", MAGIC, VERSION, data)?;
        let mesh_hash = r.u64()?;
        let threshold = r.count(48)?;
        let mut boundary = BoundaryConditions::default();
        for c in Coordinate::ALL {
            let len = r.count(16)?;
            let entries = boundary.get_mut(c);
            for _ in 0..len {
                let i = r.u64()?;
                let i = usize::try_from(i).map_err(|_| r.err(format!("vertex index {i} too large")))?;
                entries.push((i, r.f64()?));
            }
        }
        let mut coefficients: [Vec<f64>; 6] = Default::default();
        for xi in &mut coefficients {
            *xi = r.f64s(threshold)?;
        }
        r.finish()?;
        Ok(CompressedMapping {
            mesh_hash,
            boundary,
            coefficients,
        })
    }
}

fn check_spectrum(mesh: &TetMesh, spectrum: &Spectrum) -> Result<()> {
    let actual = mesh.content_hash();
    if spectrum.mesh_hash != actual {
        return Err(Error::MeshMismatch {
            expected: spectrum.mesh_hash,
            actual,
        });
    }
    Ok(())
}

/// Per-vertex fields of the six representation components.
pub fn vertex_fields(mesh: &TetMesh, rep: &QcRep) -> Result<[Vec<f64>; 6]> {
    let fields: Vec<Vec<f64>> = (0..6)
        .into_par_iter()
        .map(|k| tet_to_vertex(mesh, &rep.component(k)))
        .collect::<Result<_>>()?;
    Ok(fields.try_into().expect("six components"))
}

/// Full coefficient vectors `ξ` (length `k`) of the six components.
pub fn spectral_coefficients(mapping: &Mapping, spectrum: &Spectrum) -> Result<[Vec<f64>; 6]> {
    check_spectrum(mapping.source(), spectrum)?;
    let rep = compute_representation(mapping, false)?;
    let fields = vertex_fields(mapping.source(), &rep)?;
    let xi: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| project(spectrum, f))
        .collect::<Result<_>>()?;
    Ok(xi.try_into().expect("six components"))
}

pub fn compress(
    mapping: &Mapping,
    spectrum: &Spectrum,
    threshold: usize,
    bc: &BoundaryConditions,
) -> Result<CompressedMapping> {
    if threshold == 0 || threshold > spectrum.k() {
        return Err(Error::InvalidArgument(format!(
            "threshold must be in 1..={}, got {threshold}",
            spectrum.k()
        )));
    }
    bc.validate(mapping.source().n_vertices())?;
    let mut coefficients = spectral_coefficients(mapping, spectrum)?;
    for xi in &mut coefficients {
        xi.truncate(threshold);
    }
    Ok(CompressedMapping {
        mesh_hash: spectrum.mesh_hash,
        boundary: bc.clone(),
        coefficients,
    })
}

/// Clamps the eigenvalues of every stretch tensor to at least
/// [`SPD_FLOOR`]. Returns the repaired representation and the number of
/// tets that needed it.
pub fn repair_spd(rep: &QcRep) -> (QcRep, usize) {
    let repaired: Vec<(crate::qcrep::Q, bool)> = rep
        .as_slice()
        .par_iter()
        .map(|q| {
            let e = sym_eigen3(&matrix_from_q(q));
            if e.values[2] >= SPD_FLOOR {
                (*q, false)
            } else {
                let clamped = e.values.map(|v| v.max(SPD_FLOOR));
                (q_from_matrix(&recompose(&e.vectors, clamped)), true)
            }
        })
        .collect();
    let count = repaired.iter().filter(|r| r.1).count();
    (QcRep::new(repaired.into_iter().map(|r| r.0).collect()), count)
}

#[derive(Clone, Debug)]
pub struct Decompressed {
    pub reconstruction: Reconstruction,
    /// Representation the mapping was reconstructed from, after repair.
    pub rep: QcRep,
    /// Tets whose stretch tensor was clamped back into the SPD cone.
    pub clamped: usize,
}

/// Representation rebuilt from the stored coefficients.
pub fn decode_representation(c: &CompressedMapping, mesh: &TetMesh, spectrum: &Spectrum) -> Result<QcRep> {
    check_spectrum(mesh, spectrum)?;
    if c.mesh_hash != spectrum.mesh_hash {
        return Err(Error::MeshMismatch {
            expected: c.mesh_hash,
            actual: spectrum.mesh_hash,
        });
    }
    let components: Vec<Vec<f64>> = c
        .coefficients
        .iter()
        .map(|xi| vertex_to_tet(mesh, &synthesize(spectrum, xi)?))
        .collect::<Result<_>>()?;
    QcRep::from_components(&components.try_into().expect("six components"))
}

pub fn decompress(
    c: &CompressedMapping,
    mesh: Arc<TetMesh>,
    spectrum: &Spectrum,
    opts: &CgOptions,
) -> Result<Decompressed> {
    let raw = decode_representation(c, &mesh, spectrum)?;
    let (rep, clamped) = repair_spd(&raw);
    let reconstruction = reconstruct(mesh, &rep, &c.boundary, opts)?;
    Ok(Decompressed {
        reconstruction,
        rep,
        clamped,
    })
}

/// Mapping reconstructed from the tet→vertex→tet smoothed representation
/// without any truncation: the floor a full-spectrum round trip can reach.
pub fn interpolation_floor(
    mapping: &Mapping,
    bc: &BoundaryConditions,
    opts: &CgOptions,
) -> Result<Reconstruction> {
    let mesh = mapping.source().clone();
    let rep = compute_representation(mapping, false)?;
    let fields = vertex_fields(&mesh, &rep)?;
    let components: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| vertex_to_tet(&mesh, f))
        .collect::<Result<_>>()?;
    let smoothed = QcRep::from_components(&components.try_into().expect("six components"))?;
    reconstruct(mesh, &repair_spd(&smoothed).0, bc, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cube_mesh, Deformation};
    use crate::mesh::Point;
    use crate::spectral::{build_laplace_beltrami, eigensolve, EigenOptions};

    fn full_spectrum(mesh: &TetMesh) -> Spectrum {
        let lb = build_laplace_beltrami(mesh).unwrap();
        eigensolve(&lb, lb.n(), &EigenOptions::default()).unwrap()
    }

    #[test]
    fn projection_examples() {
        let mesh = cube_mesh(2);
        let s = full_spectrum(&mesh);
        let xi = project(&s, &s.vectors[1]).unwrap();
        for (i, x) in xi.iter().enumerate() {
            let e = if i == 1 { 1.0 } else { 0.0 };
            assert!((x - e).abs() < 1e-8);
        }
        let c = 2.5;
        let xi = project(&s, &vec![c; mesh.n_vertices()]).unwrap();
        let total: f64 = s.mass.iter().sum();
        assert!((xi[0] - c * total.sqrt()).abs() < 1e-8);
        assert!(xi[1..].iter().all(|x| x.abs() < 1e-8));

        let f: Vec<f64> = mesh
            .vertices()
            .iter()
            .map(|p| (3.0 * p.x).sin() + p.y * p.z)
            .collect();
        let back = synthesize(&s, &project(&s, &f).unwrap()).unwrap();
        assert!(f.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-8));
        assert!(project(&s, &[1.0]).is_err());
    }

    #[test]
    fn transfer_examples() {
        let mesh = cube_mesh(2);
        let g = vec![3.0; mesh.n_tets()];
        let f = tet_to_vertex(&mesh, &g).unwrap();
        assert!(f.iter().all(|&x| (x - 3.0).abs() < 1e-14));
        assert!(vertex_to_tet(&mesh, &f)
            .unwrap()
            .iter()
            .all(|&x| (x - 3.0).abs() < 1e-14));

        let single = TetMesh::new(
            vec![Point::zeros(), Point::x(), Point::y(), Point::z()],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        assert_eq!(tet_to_vertex(&single, &[5.0]).unwrap(), vec![5.0; 4]);

        // two tets sharing face (1,2,3); volumes 1/6 and 1/3
        let two = TetMesh::new(
            vec![
                Point::zeros(),
                Point::x(),
                Point::y(),
                Point::z(),
                Point::new(1.0, 1.0, 1.0),
            ],
            vec![[0, 1, 2, 3], [4, 1, 3, 2]],
        )
        .unwrap();
        let v0 = two.volume(0);
        let v1 = two.volume(1);
        assert!((v0 - 1.0 / 6.0).abs() < 1e-15 && (v1 - 1.0 / 3.0).abs() < 1e-15);
        let f = tet_to_vertex(&two, &[0.0, 1.0]).unwrap();
        assert_eq!(f[0], 0.0);
        assert_eq!(f[4], 1.0);
        for &i in &[1, 2, 3] {
            assert!((f[i] - 2.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn truncation_errors_are_monotone() {
        let e = truncation_errors(&[3.0, -1.0, 0.5, 1e-20]);
        assert_eq!(e[0], 9.0 + 1.0 + 0.25 + 1e-40);
        assert_eq!(e[4], 0.0);
        assert!(e.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn identity_mapping_compresses_to_the_constant_mode() {
        let mesh = Arc::new(cube_mesh(2));
        let s = full_spectrum(&mesh);
        let id = Mapping::identity(mesh.clone());
        let bc = BoundaryConditions::cube_faces(&id);
        let c = compress(&id, &s, 3, &bc).unwrap();
        for (k, xi) in c.coefficients.iter().enumerate() {
            assert_eq!(xi.len(), 3);
            assert!(xi[1..].iter().all(|x| x.abs() < 1e-8));
            let expected = crate::qcrep::IDENTITY_Q[k] * s.mass.iter().sum::<f64>().sqrt();
            assert!((xi[0] - expected).abs() < 1e-8);
        }
        let d = decompress(&c, mesh, &s, &CgOptions::default()).unwrap();
        assert_eq!(d.clamped, 0);
        assert!(d.reconstruction.mapping.normalized_l2_distance(&id) < 1e-10);
    }

    #[test]
    fn full_threshold_reproduces_the_vertex_fields() {
        let mesh = Arc::new(cube_mesh(3));
        let s = full_spectrum(&mesh);
        let f = Deformation::fixture(0).apply(mesh.clone());
        let bc = BoundaryConditions::cube_faces(&f);
        let c = compress(&f, &s, s.k(), &bc).unwrap();
        let decoded = decode_representation(&c, &mesh, &s).unwrap();
        let rep = compute_representation(&f, false).unwrap();
        let fields = vertex_fields(&mesh, &rep).unwrap();
        for (k, field) in fields.iter().enumerate() {
            let expected = vertex_to_tet(&mesh, field).unwrap();
            for (a, b) in decoded.component(k).iter().zip(&expected) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        let d = decompress(&c, mesh, &s, &CgOptions::default()).unwrap();
        for coord in Coordinate::ALL {
            for &(i, beta) in bc.get(coord) {
                assert_eq!(d.reconstruction.mapping.images()[i][coord.index()], beta);
            }
        }
    }

    #[test]
    fn container_round_trip() {
        let c = CompressedMapping {
            mesh_hash: 0xdead_beef,
            boundary: BoundaryConditions {
                u: vec![(0, 0.0), (7, 1.0)],
                v: vec![(3, 0.5)],
                w: vec![],
            },
            coefficients: std::array::from_fn(|k| vec![k as f64, -1.5]),
        };
        let bytes = c.to_bytes();
        assert_eq!(&bytes[..4], b"QCZ3");
        assert_eq!(CompressedMapping::from_bytes(&bytes).unwrap(), c);
        assert!(CompressedMapping::from_bytes(&bytes[..bytes.len() - 8]).is_err());
        let mut huge = bytes.clone();
        huge[16..24].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(CompressedMapping::from_bytes(&huge).is_err());
    }

    #[test]
    fn mismatched_mesh_is_rejected() {
        let s = full_spectrum(&cube_mesh(1));
        let mesh = Arc::new(cube_mesh(2));
        let id = Mapping::identity(mesh.clone());
        let err = compress(&id, &s, 1, &BoundaryConditions::cube_faces(&id)).unwrap_err();
        assert!(matches!(err, Error::MeshMismatch { .. }));
    }

    #[test]
    fn repair_counts_clamped_tets() {
        let rep = QcRep::new(vec![
            [1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, 1.0, 0.0, -0.5],
        ]);
        let (fixed, count) = repair_spd(&rep);
        assert_eq!(count, 1);
        assert_eq!(fixed.get(0), rep.get(0));
        assert!((fixed.get(1)[5] - SPD_FLOOR).abs() < 1e-15);
    }
}
