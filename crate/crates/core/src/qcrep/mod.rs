//! The quasiconformal representation of a tetrahedral mapping: per tet, the
//! upper triangle of the stretch `P = √(JᵀJ)`.

mod decompose;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binfmt::{Reader, Writer};
use crate::error::{Error, Result};
use crate::mesh::Mapping;

pub use decompose::{
    build_dilation_matrix, decompose_stretch, dilation_from, euler_rotation, from_euler, polar_decompose,
    to_euler, DilationDecomposition, EulerForm, GIMBAL_TOLERANCE, MIN_STRETCH,
};

/// `(P₁₁, P₁₂, P₁₃, P₂₂, P₂₃, P₃₃)`.
pub type Q = [f64; 6];

pub const IDENTITY_Q: Q = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0];

pub fn matrix_from_q(q: &Q) -> Matrix3<f64> {
    Matrix3::new(q[0], q[1], q[2], q[1], q[3], q[4], q[2], q[4], q[5])
}

/// Upper triangle of `p`; the lower triangle is ignored.
pub fn q_from_matrix(p: &Matrix3<f64>) -> Q {
    [p[(0, 0)], p[(0, 1)], p[(0, 2)], p[(1, 1)], p[(1, 2)], p[(2, 2)]]
}

const MAGIC: &[u8; 4] = b"QCR3";
const VERSION: u32 = 1;

/// One 6-vector per tet, ordered by tet index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcRep {
    q: Vec<Q>,
}

impl QcRep {
    pub fn new(q: Vec<Q>) -> QcRep {
        QcRep { q }
    }

    pub fn identity(n_tets: usize) -> QcRep {
        QcRep {
            q: vec![IDENTITY_Q; n_tets],
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn get(&self, t: usize) -> &Q {
        &self.q[t]
    }

    pub fn as_slice(&self) -> &[Q] {
        &self.q
    }

    pub fn into_vec(self) -> Vec<Q> {
        self.q
    }

    pub fn to_matrix(&self, t: usize) -> Matrix3<f64> {
        matrix_from_q(&self.q[t])
    }

    /// Component `k` (0..6) of every tet.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.q.iter().map(|q| q[k]).collect()
    }

    pub fn from_components(components: &[Vec<f64>; 6]) -> Result<QcRep> {
        let m = components[0].len();
        if let Some(c) = components.iter().find(|c| c.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: c.len(),
            });
        }
        Ok(QcRep {
            q: (0..m)
                .map(|t| std::array::from_fn(|k| components[k][t]))
                .collect(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.u64(self.q.len() as u64);
        for q in &self.q {
            w.f64s(q);
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<QcRep> {
        let mut r = Reader::open("QCR3", MAGIC, VERSION, data)?;
        let m = r.count(48)?;
        let flat = r.f64s(6 * m)?;
        r.finish()?;
        Ok(QcRep {
            q: flat.chunks_exact(6).map(|c| c.try_into().unwrap()).collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("representations always serialize")
    }

    pub fn from_json(bytes: &[u8]) -> Result<QcRep> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

/// Representation of `mapping`. Unless `permissive`, a mapping with any
/// tet of `det J ≤ 0` is rejected with every offending tet listed; in
/// permissive mode such tets are represented by the stretch of `|J|`.
pub fn compute_representation(mapping: &Mapping, permissive: bool) -> Result<QcRep> {
    if !permissive {
        mapping.check_diffeomorphic()?;
    }
    let results: Vec<Result<Q>> = (0..mapping.source().n_tets())
        .into_par_iter()
        .map(|t| {
            let dec = decompose::stretch_of(&mapping.jacobian(t)).map_err(|e| e.at_tet(t))?;
            Ok(q_from_matrix(&dec.stretch()))
        })
        .collect();
    let q = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(QcRep { q })
}
