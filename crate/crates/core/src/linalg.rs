//! Small dense helpers: a cyclic Jacobi eigensolver for symmetric 3×3
//! matrices, elementary rotations and a tridiagonal QL eigensolver used by
//! the Lanczos iteration.

use nalgebra::{Matrix3, Vector3};

/// Off-diagonal Frobenius norm at which the Jacobi sweep stops, relative to
/// the Frobenius norm of the input.
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric 3×3 matrix. Eigenvalues are sorted in
/// descending order; column `k` of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymEigen3 {
    pub values: [f64; 3],
    pub vectors: Matrix3<f64>,
}

impl SymEigen3 {
    /// `V diag(f(λ)) Vᵀ`, assembled so the result is exactly symmetric.
    pub fn recompose(&self, f: impl Fn(f64) -> f64) -> Matrix3<f64> {
        let d = self.values.map(f);
        recompose(&self.vectors, d)
    }
}

/// `V diag(d) Vᵀ` with the lower triangle mirrored from the upper one.
pub fn recompose(v: &Matrix3<f64>, d: [f64; 3]) -> Matrix3<f64> {
    let mut out = Matrix3::zeros();
    for r in 0..3 {
        for c in r..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += v[(r, k)] * d[k] * v[(c, k)];
            }
            out[(r, c)] = s;
            out[(c, r)] = s;
        }
    }
    out
}

/// Cyclic Jacobi iteration on a symmetric matrix. Only the upper triangle of
/// `m` is read.
pub fn sym_eigen3(m: &Matrix3<f64>) -> SymEigen3 {
    let mut a = *m;
    for r in 0..3 {
        for c in 0..r {
            a[(r, c)] = a[(c, r)];
        }
    }
    let mut v = Matrix3::<f64>::identity();
    let scale = a.norm();
    let stop = JACOBI_TOL * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = (2.0 * (a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2))).sqrt();
        if off <= stop || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            rotate(&mut a, &mut v, p, q, c, s);
        }
    }

    let diag = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
    let mut order = [0usize, 1, 2];
    // stable: equal eigenvalues keep the Jacobi output order
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.map(|k| diag[k]);
    let vectors = Matrix3::from_columns(&order.map(|k| v.column(k).into_owned()));
    SymEigen3 { values, vectors }
}

/// Applies the Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut Matrix3<f64>, v: &mut Matrix3<f64>, p: usize, q: usize, c: f64, s: f64) {
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let apq = a[(p, q)];
    let r = 3 - p - q;
    let arp = a[(r, p)];
    let arq = a[(r, q)];

    a[(p, p)] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
    a[(q, q)] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    let nrp = c * arp - s * arq;
    let nrq = s * arp + c * arq;
    a[(r, p)] = nrp;
    a[(p, r)] = nrp;
    a[(r, q)] = nrq;
    a[(q, r)] = nrq;

    for k in 0..3 {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

pub fn rot_x(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Matrix whose columns are the given vectors.
pub fn from_columns(c: [Vector3<f64>; 3]) -> Matrix3<f64> {
    Matrix3::from_columns(&c)
}

/// Eigenvalues (ascending) and eigenvectors of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off` (`off.len() ==
/// diag.len() - 1`), by implicit QL with Wilkinson shifts. Eigenvectors are
/// returned as columns of a row-major `n×n` buffer: `z[row * n + col]`.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    debug_assert_eq!(off.len() + 1, n);
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zi1 = z[k * n + i + 1];
                    let zi = z[k * n + i];
                    z[k * n + i + 1] = s * zi + c * zi1;
                    z[k * n + i] = c * zi - s * zi1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + new] = z[row * n + old];
        }
    }
    Some((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn check_decomposition(m: &Matrix3<f64>) {
        let e = sym_eigen3(m);
        assert!(e.values[0] >= e.values[1] && e.values[1] >= e.values[2]);
        let vtv = e.vectors.transpose() * e.vectors;
        assert!((vtv - Matrix3::identity()).abs().max() < 1e-13);
        let back = e.recompose(|x| x);
        assert!((back - m).abs().max() < 1e-13 * m.norm().max(1.0));

        let oracle = SymmetricEigen::new(*m);
        let mut ov: Vec<f64> = oracle.eigenvalues.iter().copied().collect();
        ov.sort_by(|a, b| b.total_cmp(a));
        for (o, v) in ov.iter().zip(e.values) {
            assert!((o - v).abs() < 1e-12 * m.norm().max(1.0));
        }
    }

    #[test]
    fn jacobi_matches_dense_oracle() {
        check_decomposition(&Matrix3::identity());
        check_decomposition(&Matrix3::new(2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 4.0));
        check_decomposition(&Matrix3::new(4.0, 1.0, -2.0, 1.0, 2.0, 0.5, -2.0, 0.5, 3.0));
        // repeated eigenvalue
        let r = rot_z(0.3) * rot_x(1.1);
        check_decomposition(&(r * Matrix3::from_diagonal(&Vector3::new(2.0, 2.0, 0.5)) * r.transpose()));
        // tiny scale
        check_decomposition(&(Matrix3::new(4.0, 1.0, -2.0, 1.0, 2.0, 0.5, -2.0, 0.5, 3.0) * 1e-9));
    }

    #[test]
    fn jacobi_sorts_descending() {
        let e = sym_eigen3(&Matrix3::from_diagonal(&Vector3::new(1.0, 3.0, 2.0)));
        assert_eq!(e.values, [3.0, 2.0, 1.0]);
        assert_eq!(e.vectors.column(0).into_owned(), Vector3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn tridiagonal_matches_dense_oracle() {
        let diag = [2.0, -1.0, 0.5, 4.0, 3.0, 3.0];
        let off = [1.0, 0.25, -2.0, 0.0, 0.7];
        let (vals, vecs) = tridiagonal_eigen(&diag, &off).unwrap();
        let n = diag.len();
        let t = DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                diag[r]
            } else if r + 1 == c {
                off[r]
            } else if c + 1 == r {
                off[c]
            } else {
                0.0
            }
        });
        let mut oracle: Vec<f64> = SymmetricEigen::new(t.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        oracle.sort_by(f64::total_cmp);
        for k in 0..n {
            assert!((vals[k] - oracle[k]).abs() < 1e-12);
            let z = DMatrix::from_fn(n, 1, |r, _| vecs[r * n + k]);
            let res = &t * &z - &z * vals[k];
            assert!(res.norm() < 1e-12);
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }
}
