use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{dot, norm, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgOptions {
    /// Target relative residual `‖h − Mx‖ / ‖h‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `10·n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> CgOptions {
        CgOptions {
            tol: 1e-12,
            max_iter: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgReport {
    pub iterations: usize,
    /// True relative residual of the returned solution.
    pub relative_residual: f64,
}

impl CgReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports always serialize")
    }
}

pub fn solve_cg(m: &SparseMatrix, h: &[f64], opts: &CgOptions) -> Result<(Vec<f64>, CgReport)> {
    solve_cg_with_guess(m, h, vec![0.0; h.len()], opts)
}

/// Jacobi-preconditioned conjugate gradient from the initial guess `x`.
/// Convergence is judged on the recursively updated residual and then
/// confirmed on the true residual; a mismatch restarts the iteration.
pub fn solve_cg_with_guess(
    m: &SparseMatrix,
    h: &[f64],
    x: Vec<f64>,
    opts: &CgOptions,
) -> Result<(Vec<f64>, CgReport)> {
    let out = cg_core(m, h, x, opts)?;
    if out.converged {
        Ok((out.x, out.report))
    } else {
        Err(Error::NoConvergence {
            iterations: out.report.iterations,
            residual: out.report.relative_residual,
            history: out.history,
        })
    }
}

pub(crate) struct CgOutcome {
    pub x: Vec<f64>,
    pub report: CgReport,
    pub converged: bool,
    pub history: Vec<f64>,
}

pub(crate) fn cg_core(m: &SparseMatrix, h: &[f64], mut x: Vec<f64>, opts: &CgOptions) -> Result<CgOutcome> {
    let n = m.n();
    for len in [h.len(), x.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n).max(1);
    let h_norm = norm(h);
    if h_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            report: CgReport {
                iterations: 0,
                relative_residual: 0.0,
            },
            converged: true,
            history: Vec::new(),
        });
    }
    let inv_diag: Vec<f64> = m
        .diag()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let true_residual = |x: &[f64]| -> Vec<f64> {
        let mx = m.mul_vec(x);
        h.iter().zip(&mx).map(|(a, b)| a - b).collect()
    };

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut mp = vec![0.0; n];
    loop {
        let mut r = true_residual(&x);
        let rel = norm(&r) / h_norm;
        let converged = rel <= opts.tol;
        if converged || iterations >= max_iter {
            return Ok(CgOutcome {
                x,
                report: CgReport {
                    iterations,
                    relative_residual: rel,
                },
                converged,
                history,
            });
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            m.mul_vec_into(&p, &mut mp);
            let pmp = dot(&p, &mp);
            if !(pmp > 0.0) {
                return Err(Error::SingularMatrix);
            }
            let alpha = rz / pmp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * mp[i];
            }
            iterations += 1;
            let rel = norm(&r) / h_norm;
            history.push(rel);
            if rel <= opts.tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_in_one_iteration() {
        let h = vec![1.0, -2.0, 3.5];
        let (x, rep) = solve_cg(&SparseMatrix::identity(3), &h, &CgOptions::default()).unwrap();
        assert_eq!(x, h);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn diagonal_two_by_two() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 0, 2.0), (1, 1, 3.0)]);
        let (x, _) = solve_cg(&m, &[2.0, 3.0], &CgOptions::default()).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn exact_guess_needs_no_iterations() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 0, 2.0), (1, 1, 3.0)]);
        let (_, rep) = solve_cg_with_guess(&m, &[2.0, 3.0], vec![1.0, 1.0], &CgOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn zero_rhs() {
        let (x, _) = solve_cg(&SparseMatrix::identity(2), &[0.0, 0.0], &CgOptions::default()).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn reports_non_convergence_with_history() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let m = SparseMatrix::from_triplets(n, t);
        let opts = CgOptions {
            tol: 1e-14,
            max_iter: Some(3),
        };
        match solve_cg(&m, &vec![1.0; n], &opts) {
            Err(Error::NoConvergence {
                iterations, history, ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn indefinite_matrix_is_detected() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(
            solve_cg(&m, &[0.0, 1.0], &CgOptions::default()),
            Err(Error::SingularMatrix)
        ));
    }
}
