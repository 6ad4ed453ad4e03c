//! Keyframe interpolation: density-controlled seeding of the volume between
//! a keyframe surface and its bounding cube, linear blending in
//! representation space, and per-frame reconstruction.

mod seeding;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Coordinate, Error, Result};
use crate::lbs3d::{reconstruct, BoundaryConditions, CgOptions, Reconstruction};
use crate::mesh::{Mapping, Point};
use crate::qcrep::{QcRep, IDENTITY_Q};

pub use seeding::{
    filter_samples, keep_probability, poisson_disk, probability_at, NearestIndex, SeedingConfig,
};

/// Margin left between an embedded keyframe and the unit cube faces.
pub const EMBEDDING_MARGIN: f64 = 0.1;

/// Uniform scale plus translation taking a point set into
/// `[0.1, 0.9]³`, centred in the cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeEmbedding {
    pub scale: f64,
    pub offset: [f64; 3],
}

impl CubeEmbedding {
    pub fn fit(points: &[Point]) -> Result<CubeEmbedding> {
        let first = *points
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot embed an empty point set".into()))?;
        let (lo, hi) = points
            .iter()
            .fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        let span = (hi - lo).max();
        if !(span > 0.0 && span.is_finite()) {
            return Err(Error::InvalidArgument("point set has no spatial extent".into()));
        }
        let scale = (1.0 - 2.0 * EMBEDDING_MARGIN) / span;
        let centre = (lo + hi) / 2.0;
        Ok(CubeEmbedding {
            scale,
            offset: [0, 1, 2].map(|k| 0.5 - scale * centre[k]),
        })
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::new(
            self.scale * p.x + self.offset[0],
            self.scale * p.y + self.offset[1],
            self.scale * p.z + self.offset[2],
        )
    }

    pub fn invert(&self, p: &Point) -> Point {
        Point::new(
            (p.x - self.offset[0]) / self.scale,
            (p.y - self.offset[1]) / self.scale,
            (p.z - self.offset[2]) / self.scale,
        )
    }
}

/// Frame parameters `0 = t₀ < t₁ < … < t_F = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct InterpolationSchedule {
    params: Vec<f64>,
}

impl InterpolationSchedule {
    pub fn new(params: Vec<f64>) -> Result<InterpolationSchedule> {
        if params.len() < 2 || params[0] != 0.0 || params[params.len() - 1] != 1.0 {
            return Err(Error::InvalidArgument(
                "schedule must start at 0 and end at 1".into(),
            ));
        }
        if params.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "schedule must be strictly increasing".into(),
            ));
        }
        Ok(InterpolationSchedule { params })
    }

    /// `frames` equally spaced parameters including both endpoints.
    pub fn uniform(frames: usize) -> Result<InterpolationSchedule> {
        if frames < 2 {
            return Err(Error::InvalidArgument(format!(
                "at least 2 frames are needed, got {frames}"
            )));
        }
        let last = (frames - 1) as f64;
        InterpolationSchedule::new((0..frames).map(|i| i as f64 / last).collect())
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
}

impl TryFrom<Vec<f64>> for InterpolationSchedule {
    type Error = Error;

    fn try_from(params: Vec<f64>) -> Result<Self> {
        InterpolationSchedule::new(params)
    }
}

impl From<InterpolationSchedule> for Vec<f64> {
    fn from(s: InterpolationSchedule) -> Vec<f64> {
        s.params
    }
}

/// `q_t = (1−t)·q_id + t·q` per tet.
pub fn interpolate_rep(rep: &QcRep, t: f64) -> QcRep {
    QcRep::new(
        rep.as_slice()
            .iter()
            .map(|q| std::array::from_fn(|k| (1.0 - t) * IDENTITY_Q[k] + t * q[k]))
            .collect(),
    )
}

/// When landmark vertices are pinned to their blended positions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LandmarkMode {
    #[default]
    EndpointsOnly,
    EveryFrame,
}

/// Per-frame Dirichlet values. Every constraint in `base` (given at `t = 1`)
/// and every landmark takes the value `(1−t)·source + t·target`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBoundary {
    pub base: BoundaryConditions,
    pub landmarks: Vec<usize>,
    pub mode: LandmarkMode,
}

impl FrameBoundary {
    /// Sliding conditions on the bounding-box faces and no landmarks.
    pub fn cube_faces(mapping: &Mapping) -> FrameBoundary {
        FrameBoundary {
            base: BoundaryConditions::cube_faces(mapping),
            landmarks: Vec::new(),
            mode: LandmarkMode::default(),
        }
    }

    pub fn with_landmarks(mut self, landmarks: Vec<usize>, mode: LandmarkMode) -> FrameBoundary {
        self.landmarks = landmarks;
        self.mode = mode;
        self
    }

    pub fn at(&self, mapping: &Mapping, t: f64) -> Result<BoundaryConditions> {
        let source = mapping.source().vertices();
        let n = source.len();
        let mut bc = self.base.clone();
        for c in Coordinate::ALL {
            let k = c.index();
            for (i, beta) in bc.get_mut(c).iter_mut() {
                if *i >= n {
                    return Err(Error::InvalidBoundary {
                        coordinate: c,
                        msg: format!("vertex {i} out of range (mesh has {n} vertices)"),
                    });
                }
                *beta = (1.0 - t) * source[*i][k] + t * *beta;
            }
        }
        let pinned = match self.mode {
            LandmarkMode::EveryFrame => true,
            LandmarkMode::EndpointsOnly => t == 0.0 || t == 1.0,
        };
        if pinned && !self.landmarks.is_empty() {
            if let Some(&i) = self.landmarks.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidArgument(format!(
                    "landmark vertex {i} out of range (mesh has {n} vertices)"
                )));
            }
            let blended: Vec<Point> = source
                .iter()
                .zip(mapping.images())
                .map(|(s, f)| s * (1.0 - t) + f * t)
                .collect();
            bc = bc.merged(&BoundaryConditions::pin_vertices(&self.landmarks, &blended));
        }
        Ok(bc)
    }
}

/// One reconstructed frame. `folded_tets` lists tets with `det J ≤ 0`.
#[derive(Clone, Debug)]
pub struct Frame {
    pub index: usize,
    pub t: f64,
    pub reconstruction: Reconstruction,
    pub folded_tets: Vec<usize>,
}

/// Reconstructs every frame of `schedule`, keeping failures per frame.
/// Errors are wrapped in [`Error::AtFrame`].
pub fn generate_frames_partial(
    mapping: &Mapping,
    schedule: &InterpolationSchedule,
    boundary: &FrameBoundary,
    opts: &CgOptions,
) -> Result<Vec<Result<Frame>>> {
    mapping.check_diffeomorphic()?;
    let rep = crate::qcrep::compute_representation(mapping, false)?;
    let mesh: Arc<_> = mapping.source().clone();
    Ok(schedule
        .params()
        .par_iter()
        .enumerate()
        .map(|(index, &t)| {
            let frame = || -> Result<Frame> {
                let bc = boundary.at(mapping, t)?;
                let reconstruction = reconstruct(mesh.clone(), &interpolate_rep(&rep, t), &bc, opts)?;
                let folded_tets = reconstruction.mapping.folded_tets();
                Ok(Frame {
                    index,
                    t,
                    reconstruction,
                    folded_tets,
                })
            };
            frame().map_err(|e| Error::AtFrame {
                frame: index,
                source: Box::new(e),
            })
        })
        .collect())
}

/// As [`generate_frames_partial`], failing on the first failed frame.
pub fn generate_frames(
    mapping: &Mapping,
    schedule: &InterpolationSchedule,
    boundary: &FrameBoundary,
    opts: &CgOptions,
) -> Result<Vec<Frame>> {
    generate_frames_partial(mapping, schedule, boundary, opts)?
        .into_iter()
        .collect()
}

/// Parses a landmark index file: one vertex index per line, blank lines and
/// `#` comments ignored, no repeats.
pub fn parse_landmarks(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line_no, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let i: usize = body.parse().map_err(|_| Error::Parse {
            line: line_no + 1,
            msg: format!("expected a vertex index, found {body:?}"),
        })?;
        if !seen.insert(i) {
            return Err(Error::Parse {
                line: line_no + 1,
                msg: format!("landmark {i} listed twice"),
            });
        }
        out.push(i);
    }
    Ok(out)
}

pub fn write_landmarks(indices: &[usize]) -> String {
    indices.iter().map(|i| format!("{i}\n")).collect()
}
