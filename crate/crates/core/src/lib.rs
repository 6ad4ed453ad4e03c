//! Quasiconformal representation and reconstruction of volumetric
//! tetrahedral mappings, with spectral compression and keyframe
//! interpolation built on top.
//!
//! ```
//! use std::sync::Arc;
//!
//! use qc3d::compute_representation;
//! use qc3d::fixtures::{cube_mesh, Deformation};
//! use qc3d::lbs3d::{reconstruct, BoundaryConditions, CgOptions};
//!
//! let mapping = Deformation::fixture(0).apply(Arc::new(cube_mesh(3)));
//! let rep = compute_representation(&mapping, false)?;
//! let bc = BoundaryConditions::cube_faces(&mapping);
//! let rebuilt = reconstruct(mapping.source().clone(), &rep, &bc, &CgOptions::default())?;
//! assert!(rebuilt.mapping.normalized_l2_distance(&mapping) < 1e-8);
//! # Ok::<(), qc3d::Error>(())
//! ```

// `!(x > 0.0)` is deliberate throughout: NaN must fail positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod binfmt;
pub mod error;
pub mod fixtures;
pub mod interp;
pub mod lbs3d;
pub mod linalg;
pub mod mesh;
pub mod qcrep;
pub mod sparse;
pub mod spectral;

pub use error::{Coordinate, Error, Result};
pub use mesh::{Mapping, Point, TetMesh};
pub use qcrep::{compute_representation, QcRep};
