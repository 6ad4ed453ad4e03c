use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operator::LaplaceBeltrami;
use crate::binfmt::{Reader, Writer};
use crate::error::{Error, Result};
use crate::lbs3d::{cg_core, CgOptions};
use crate::linalg::tridiagonal_eigen;
use crate::sparse::{dot, norm, SparseMatrix};

/// Largest admissible relative residual
/// `‖Lν − λMν‖ / ((‖L‖∞ + |λ|·max M)·‖ν‖)` of a returned eigenpair.
pub const EIGEN_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Seed of the Lanczos start vectors.
    pub seed: u64,
    /// Tolerance of the inner solves in shift-invert mode.
    pub inner_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> EigenOptions {
        EigenOptions {
            seed: 0,
            inner_tol: 1e-12,
        }
    }
}

/// The `k` smallest generalized eigenpairs `Lν = λMν`, M-orthonormal, with
/// `λ` ascending. Each `ν` has its largest-magnitude entry positive (lowest
/// index on ties).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    pub mesh_hash: u64,
    pub residuals: Vec<f64>,
}

const MAGIC: &[u8; 4] = b"QSP3";
const VERSION: u32 = 1;

impl Spectrum {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    /// The first `k` pairs.
    pub fn truncated(&self, k: usize) -> Spectrum {
        let k = k.min(self.k());
        Spectrum {
            values: self.values[..k].to_vec(),
            vectors: self.vectors[..k].to_vec(),
            mass: self.mass.clone(),
            mesh_hash: self.mesh_hash,
            residuals: self.residuals[..k].to_vec(),
        }
    }

    /// Cache container: hash, `n`, `k`, `λ`, `ν` row by row, mass,
    /// residuals.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.u64(self.mesh_hash);
        w.u64(self.n() as u64);
        w.u64(self.k() as u64);
        w.f64s(&self.values);
        for v in &self.vectors {
            w.f64s(v);
        }
        w.f64s(&self.mass);
        w.f64s(&self.residuals);
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Spectrum> {
        let mut r = Reader::open("QSP3", MAGIC, VERSION, data)?;
        let mesh_hash = r.u64()?;
        let n = r.count(8)?;
        let k = r.count(8)?;
        if k > n {
            return Err(r.err(format!("{k} eigenpairs for dimension {n}")));
        }
        let values = r.f64s(k)?;
        let mut vectors = Vec::new();
        for _ in 0..k {
            vectors.push(r.f64s(n)?);
        }
        let mass = r.f64s(n)?;
        let residuals = r.f64s(k)?;
        r.finish()?;
        Ok(Spectrum {
            values,
            vectors,
            mass,
            mesh_hash,
            residuals,
        })
    }
}

/// Which operator the Lanczos iteration runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMode {
    /// `S = M^{-1/2} L M^{-1/2}`, used when `4k ≥ n`.
    Direct,
    /// `(S + σI)⁻¹ = M^{1/2} (L + σM)⁻¹ M^{1/2}` with `σ = (tr L / tr M)·k/n`.
    ShiftInvert,
}

pub fn eigen_mode(n: usize, k: usize) -> EigenMode {
    if 4 * k >= n {
        EigenMode::Direct
    } else {
        EigenMode::ShiftInvert
    }
}

struct Operator {
    mode: EigenMode,
    s: SparseMatrix,
    shifted: Option<SparseMatrix>,
    sqrt_mass: Vec<f64>,
    inner: CgOptions,
}

/// Inner solves that stall above the requested tolerance are accepted up
/// to this relative residual.
const INNER_ACCEPT: f64 = 1e-10;

impl Operator {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.mode {
            EigenMode::Direct => Ok(self.s.mul_vec(x)),
            EigenMode::ShiftInvert => {
                let m = self.shifted.as_ref().expect("shift-invert operator");
                let rhs: Vec<f64> = x.iter().zip(&self.sqrt_mass).map(|(a, b)| a * b).collect();
                let out = cg_core(m, &rhs, vec![0.0; rhs.len()], &self.inner)?;
                if !(out.report.relative_residual <= INNER_ACCEPT) {
                    return Err(Error::NoConvergence {
                        iterations: out.report.iterations,
                        residual: out.report.relative_residual,
                        history: out.history,
                    });
                }
                Ok(out.x.iter().zip(&self.sqrt_mass).map(|(a, b)| a * b).collect())
            }
        }
    }

    /// Ordering key: smaller is more wanted.
    fn rank(&self, theta: f64) -> f64 {
        match self.mode {
            EigenMode::Direct => theta,
            EigenMode::ShiftInvert => -theta,
        }
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes keep the result orthogonal to working precision
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            for (a, b) in v.iter_mut().zip(q) {
                *a -= c * b;
            }
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize, locked: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, locked);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

/// One Lanczos run in the orthogonal complement of `locked`. Returns the
/// Ritz pairs whose residual estimate is below `tol·‖T‖`, most wanted
/// first. Stops once the `want` most wanted pairs have converged, on
/// breakdown, or when the complement is exhausted.
fn lanczos_run(
    op: &Operator,
    start: Vec<f64>,
    locked: &[Vec<f64>],
    want: usize,
    tol: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = start.len();
    let dim = n - locked.len();
    let mut basis: Vec<Vec<f64>> = vec![start];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let check_every = 8;
    loop {
        let j = basis.len() - 1;
        let mut w = op.apply(&basis[j])?;
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        let m = alpha.len();
        let scale = alpha
            .iter()
            .chain(&beta)
            .fold(0.0f64, |s, x| s.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let breakdown = b <= 1e-12 * scale;
        let exhausted = m >= dim;
        if breakdown || exhausted || (m >= want && (m - want).is_multiple_of(check_every)) {
            let (theta, z) = tridiagonal_eigen(&alpha, &beta).ok_or(Error::EigenNoConvergence {
                worst: f64::INFINITY,
                residuals: Vec::new(),
            })?;
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| op.rank(theta[x]).total_cmp(&op.rank(theta[y])));
            let final_run = breakdown || exhausted;
            let estimate = |c: usize| {
                if final_run {
                    0.0
                } else {
                    b * z[(m - 1) * m + c].abs()
                }
            };
            let converged: Vec<usize> = order
                .iter()
                .copied()
                .take_while(|&c| estimate(c) <= tol * scale)
                .collect();
            if final_run || converged.len() >= want {
                return Ok(converged
                    .into_iter()
                    .map(|c| {
                        let mut y = vec![0.0; n];
                        for (r, q) in basis.iter().enumerate() {
                            let coef = z[r * m + c];
                            for (yi, qi) in y.iter_mut().zip(q) {
                                *yi += coef * qi;
                            }
                        }
                        (theta[c], y)
                    })
                    .collect());
            }
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
}

/// Smallest `k` generalized eigenpairs of `(L, M)` by Lanczos with full
/// reorthogonalization and locking. Converged vectors are locked and later
/// runs proceed in their orthogonal complement until a run finds nothing
/// below the current `k`-th eigenvalue, which recovers repeated
/// eigenvalues.
pub fn eigensolve(lb: &LaplaceBeltrami, k: usize, opts: &EigenOptions) -> Result<Spectrum> {
    let n = lb.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "eigenpair count must be in 1..={n}, got {k}"
        )));
    }
    let sqrt_mass: Vec<f64> = lb.mass.iter().map(|m| m.sqrt()).collect();
    let inv_sqrt: Vec<f64> = sqrt_mass.iter().map(|s| 1.0 / s).collect();
    let mode = eigen_mode(n, k);
    let shifted = match mode {
        EigenMode::Direct => None,
        EigenMode::ShiftInvert => {
            let tr_l: f64 = lb.stiffness.diag().iter().sum();
            let tr_m: f64 = lb.mass.iter().sum();
            // mean eigenvalue scaled by the wanted fraction of the spectrum
            let sigma = (tr_l / tr_m) * k as f64 / n as f64;
            Some(lb.stiffness.add_diag(sigma, &lb.mass))
        }
    };
    let op = Operator {
        mode,
        s: lb.stiffness.scale_symmetric(&inv_sqrt),
        shifted,
        sqrt_mass,
        inner: CgOptions {
            tol: opts.inner_tol,
            max_iter: Some(4 * n),
        },
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut lambdas: Vec<f64> = Vec::new();
    let rayleigh = |y: &[f64]| dot(y, &op.s.mul_vec(y)) / dot(y, y);
    let max_runs = 4 * k + 16;
    for _ in 0..max_runs {
        if locked.len() == n {
            break;
        }
        let Some(start) = random_unit(&mut rng, n, &locked) else {
            break;
        };
        let want = k.saturating_sub(locked.len()).max(1);
        let found = lanczos_run(&op, start, &locked, want, 1e-11)?;
        let kth = {
            let mut sorted = lambdas.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.get(k - 1).copied()
        };
        let mut new: Vec<(f64, Vec<f64>)> = Vec::new();
        for (_, mut y) in found {
            orthogonalize(&mut y, &locked);
            orthogonalize(&mut y, &new.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
            let ny = norm(&y);
            if ny < 0.5 {
                continue;
            }
            y.iter_mut().for_each(|x| *x /= ny);
            new.push((rayleigh(&y), y));
        }
        let best = new.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        if let Some(kth) = kth {
            let slack = 1e-10 * kth.abs().max(lambdas.iter().fold(0.0f64, |m, x| m.max(x.abs())));
            if best >= kth - slack {
                break;
            }
        }
        if new.is_empty() {
            continue;
        }
        for (l, y) in new {
            lambdas.push(l);
            locked.push(y);
        }
    }
    if locked.len() < k {
        return Err(Error::EigenNoConvergence {
            worst: f64::INFINITY,
            residuals: Vec::new(),
        });
    }

    let mut order: Vec<usize> = (0..locked.len()).collect();
    order.sort_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]));
    order.truncate(k);
    let l_norm = lb.stiffness.norm_inf();
    let m_max = lb.mass.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for &c in &order {
        let mut nu: Vec<f64> = locked[c].iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
        let m_norm = nu
            .iter()
            .zip(&lb.mass)
            .map(|(x, m)| x * x * m)
            .sum::<f64>()
            .sqrt();
        nu.iter_mut().for_each(|x| *x /= m_norm);
        fix_sign(&mut nu);
        let l_nu = lb.stiffness.mul_vec(&nu);
        let lambda = dot(&nu, &l_nu);
        let res: Vec<f64> = l_nu
            .iter()
            .zip(&nu)
            .zip(&lb.mass)
            .map(|((l, x), m)| l - lambda * m * x)
            .collect();
        let denom = (l_norm + lambda.abs() * m_max) * norm(&nu);
        residuals.push(if denom > 0.0 {
            norm(&res) / denom
        } else {
            norm(&res)
        });
        values.push(lambda);
        vectors.push(nu);
    }
    let worst = residuals.iter().fold(0.0f64, |a, &b| a.max(b));
    if !(worst <= EIGEN_TOLERANCE) {
        return Err(Error::EigenNoConvergence { worst, residuals });
    }
    Ok(Spectrum {
        values,
        vectors,
        mass: lb.mass.clone(),
        mesh_hash: lb.mesh_hash,
        residuals,
    })
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
