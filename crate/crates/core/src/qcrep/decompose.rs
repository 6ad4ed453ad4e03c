//! Polar decomposition, the dilation matrix and the Euler-angle form of a
//! stretch tensor.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{recompose, rot_x, rot_y, rot_z, sym_eigen3};

/// Smallest admissible stretch; below this the dilation matrix entries
/// `bc/a, ac/b, ab/c` are considered unbounded.
pub const MIN_STRETCH: f64 = 1e-12;

/// `|cos θy|` below which the Euler angles are in gimbal lock.
pub const GIMBAL_TOLERANCE: f64 = 1e-8;

/// Eigen-structure of a stretch `P = W diag(a,b,c) Wᵀ`, `a ≥ b ≥ c > 0`,
/// with `det W = +1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DilationDecomposition {
    pub singular_values: [f64; 3],
    pub eigenvectors: Matrix3<f64>,
    /// Rotation factor `U` of `J = U P`, when decomposing a Jacobian.
    pub rotation: Option<Matrix3<f64>>,
}

impl DilationDecomposition {
    pub fn stretch(&self) -> Matrix3<f64> {
        recompose(&self.eigenvectors, self.singular_values)
    }
}

/// Flips one column of `w` when `det w < 0`: the lowest-index column whose
/// largest-magnitude entry is negative, or column 0 if there is none.
pub(crate) fn fix_handedness(w: &mut Matrix3<f64>) {
    if w.determinant() >= 0.0 {
        return;
    }
    let leading_negative = |c: usize| {
        let col = w.column(c);
        let mut best = 0;
        for r in 1..3 {
            if col[r].abs() > col[best].abs() {
                best = r;
            }
        }
        col[best] < 0.0
    };
    let c = (0..3).find(|&c| leading_negative(c)).unwrap_or(0);
    w.column_mut(c).neg_mut();
}

/// Eigen-structure of a symmetric positive definite matrix (upper triangle
/// read). Fails if the smallest eigenvalue is at most [`MIN_STRETCH`].
pub fn decompose_stretch(p: &Matrix3<f64>) -> Result<DilationDecomposition> {
    let e = sym_eigen3(p);
    if !(e.values[2] > MIN_STRETCH) {
        return Err(Error::UnboundedDilation {
            smallest: e.values[2],
        });
    }
    let mut w = e.vectors;
    fix_handedness(&mut w);
    Ok(DilationDecomposition {
        singular_values: e.values,
        eigenvectors: w,
        rotation: None,
    })
}

/// `J = U P` with `P = √(JᵀJ)`, computed from the eigendecomposition of
/// `JᵀJ`. Requires `det J > 0`.
pub fn polar_decompose(j: &Matrix3<f64>) -> Result<DilationDecomposition> {
    let det = j.determinant();
    if !(det > 0.0) {
        return Err(Error::OrientationReversed { det });
    }
    let mut dec = stretch_of(j)?;
    let [a, b, c] = dec.singular_values;
    let p_inv = recompose(&dec.eigenvectors, [1.0 / a, 1.0 / b, 1.0 / c]);
    dec.rotation = Some(j * p_inv);
    Ok(dec)
}

/// Singular values and right singular vectors of `j` via `JᵀJ`.
pub(crate) fn stretch_of(j: &Matrix3<f64>) -> Result<DilationDecomposition> {
    let jtj = j.transpose() * j;
    let e = sym_eigen3(&jtj);
    let sv = e.values.map(|x| x.max(0.0).sqrt());
    if !(sv[2] > MIN_STRETCH) {
        return Err(Error::UnboundedDilation { smallest: sv[2] });
    }
    let mut w = e.vectors;
    fix_handedness(&mut w);
    Ok(DilationDecomposition {
        singular_values: sv,
        eigenvectors: w,
        rotation: None,
    })
}

/// `𝒜 = W diag(bc/a, ac/b, ab/c) Wᵀ` for the stretch encoded by `q`.
pub fn build_dilation_matrix(q: &[f64; 6]) -> Result<Matrix3<f64>> {
    let dec = decompose_stretch(&super::matrix_from_q(q))?;
    Ok(dilation_from(&dec))
}

pub fn dilation_from(dec: &DilationDecomposition) -> Matrix3<f64> {
    let [a, b, c] = dec.singular_values;
    recompose(&dec.eigenvectors, [b * c / a, a * c / b, a * b / c])
}

/// `(a, b, c, θx, θy, θz)` with `W = R_z(θz) R_y(θy) R_x(θx)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerForm {
    pub singular_values: [f64; 3],
    /// `[θx, θy, θz]` in radians.
    pub angles: [f64; 3],
    /// Set when `|cos θy| < 1e-8`; `θx` is then fixed to 0.
    pub gimbal_lock: bool,
}

pub fn to_euler(dec: &DilationDecomposition) -> EulerForm {
    let r = &dec.eigenvectors;
    let cos_y = r[(2, 1)].hypot(r[(2, 2)]);
    let theta_y = (-r[(2, 0)]).atan2(cos_y);
    let (theta_x, theta_z, gimbal_lock) = if cos_y < GIMBAL_TOLERANCE {
        // with θx = 0: r12 = -sin θz, r22 = cos θz
        (0.0, (-r[(0, 1)]).atan2(r[(1, 1)]), true)
    } else {
        (r[(2, 1)].atan2(r[(2, 2)]), r[(1, 0)].atan2(r[(0, 0)]), false)
    };
    EulerForm {
        singular_values: dec.singular_values,
        angles: [theta_x, theta_y, theta_z],
        gimbal_lock,
    }
}

pub fn euler_rotation(angles: [f64; 3]) -> Matrix3<f64> {
    rot_z(angles[2]) * rot_y(angles[1]) * rot_x(angles[0])
}

pub fn from_euler(e: &EulerForm) -> [f64; 6] {
    let p = recompose(&euler_rotation(e.angles), e.singular_values);
    super::q_from_matrix(&p)
}
