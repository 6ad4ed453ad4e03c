#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qc3d::spectral::LaplaceBeltrami;

/// Dense generalized eigenpairs of `Lν = λMν` through the symmetric matrix
/// `M^{-1/2} L M^{-1/2}`, ascending, vectors M-orthonormal.
pub fn dense_generalized_eigen(lb: &LaplaceBeltrami) -> (Vec<f64>, DMatrix<f64>) {
    let n = lb.n();
    let l = lb.stiffness.to_dense();
    let s: Vec<f64> = lb.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| s[i] * l[(i, j)] * s[j]);
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])] * s[r]);
    (values, vectors)
}

pub fn m_dot(mass: &[f64], a: &[f64], b: &[f64]) -> f64 {
    mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
}

/// M-norm distance from `v` to the span of the oracle columns whose
/// eigenvalues lie within `cluster` (relative) of `lambda`.
pub fn distance_to_eigenspace(
    mass: &[f64],
    values: &[f64],
    vectors: &DMatrix<f64>,
    lambda: f64,
    v: &[f64],
    cluster: f64,
) -> f64 {
    let mut r = DVector::from_column_slice(v);
    for (c, &mu) in values.iter().enumerate() {
        if (mu - lambda).abs() <= cluster * (1.0 + lambda.abs()) {
            let col: Vec<f64> = vectors.column(c).iter().copied().collect();
            let proj = m_dot(mass, &col, v);
            for i in 0..r.len() {
                r[i] -= proj * col[i];
            }
        }
    }
    m_dot(mass, r.as_slice(), r.as_slice()).sqrt()
}
