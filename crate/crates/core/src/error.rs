use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One of the three image coordinate functions solved for during
/// reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coordinate {
    U,
    V,
    W,
}

impl Coordinate {
    pub const ALL: [Coordinate; 3] = [Coordinate::U, Coordinate::V, Coordinate::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Coordinate> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coordinate::U => "u",
            Coordinate::V => "v",
            Coordinate::W => "w",
        })
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    const SHOWN: usize = 16;
    let mut s = items
        .iter()
        .take(SHOWN)
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if items.len() > SHOWN {
        s.push_str(&format!(", ... ({} total)", items.len()));
    }
    s
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("tet {tet}: vertex index {index} out of range (mesh has {count} vertices)")]
    IndexOutOfRange { tet: usize, index: usize, count: usize },

    #[error("tet {tet}: vertex indices are not distinct")]
    RepeatedIndex { tet: usize },

    #[error("tet {tet}: volume {volume:e} is below the degeneracy tolerance {tolerance:e}")]
    DegenerateTet { tet: usize, volume: f64, tolerance: f64 },

    #[error("vertex {0} is not referenced by any tet")]
    UnreferencedVertex(usize),

    #[error("mapping has {images} images for {vertices} source vertices")]
    ImageCountMismatch { images: usize, vertices: usize },

    #[error("mapping is not orientation preserving (det J <= 0) on tets: {}", join(tets))]
    NonDiffeomorphic { tets: Vec<usize> },

    #[error("det(J) = {det:e} is not positive: orientation reversed")]
    OrientationReversed { det: f64 },

    #[error("dilation matrix is unbounded: smallest stretch {smallest:e}")]
    UnboundedDilation { smallest: f64 },

    #[error("tet {tet}: {source}")]
    AtTet {
        tet: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix is singular or not positive definite")]
    SingularMatrix,

    #[error(
        "linear system(s) for {} are singular: no constrained vertex",
        join(coordinates)
    )]
    SingularSystem { coordinates: Vec<Coordinate> },

    #[error("boundary condition for {coordinate}: {msg}")]
    InvalidBoundary { coordinate: Coordinate, msg: String },

    #[error(
        "conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("eigensolver did not converge: worst relative residual {worst:e}")]
    EigenNoConvergence { worst: f64, residuals: Vec<f64> },

    #[error("tet {tet}: dihedral angle at edge ({a}, {b}) is degenerate")]
    DegenerateDihedral { tet: usize, a: usize, b: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("data was built for a different mesh (hash {expected:016x}, mesh is {actual:016x})")]
    MeshMismatch { expected: u64, actual: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed {container} data: {msg}")]
    Format { container: &'static str, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_tet(self, tet: usize) -> Error {
        Error::AtTet {
            tet,
            source: Box::new(self),
        }
    }

    pub(crate) fn format(container: &'static str, msg: impl Into<String>) -> Error {
        Error::Format {
            container,
            msg: msg.into(),
        }
    }

    /// True for failures of the numerics (folds, degenerate Jacobians,
    /// non-convergence) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonDiffeomorphic { .. }
            | Error::OrientationReversed { .. }
            | Error::UnboundedDilation { .. }
            | Error::SingularMatrix
            | Error::NoConvergence { .. }
            | Error::EigenNoConvergence { .. }
            | Error::DegenerateDihedral { .. } => true,
            Error::AtTet { source, .. } | Error::AtFrame { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
