//! Cotangent Laplace–Beltrami operator on tetrahedral meshes, its
//! generalized eigenpairs, and the spectral codec that compresses a
//! mapping through the coefficients of its representation.

mod codec;
mod eigen;
mod operator;

pub use codec::{
    compress, decode_representation, decompress, interpolation_floor, project, repair_spd,
    spectral_coefficients, storage_ratio, synthesize, tet_to_vertex, truncation_errors, vertex_fields,
    vertex_to_tet, CompressedMapping, Decompressed, SPD_FLOOR,
};
pub use eigen::{eigen_mode, eigensolve, EigenMode, EigenOptions, Spectrum, EIGEN_TOLERANCE};
pub use operator::{build_laplace_beltrami, LaplaceBeltrami, DIHEDRAL_TOLERANCE};
