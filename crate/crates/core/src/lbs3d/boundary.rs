use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Coordinate, Error, Result};
use crate::mesh::{boundary_vertices, surface_vertices, AxisPlane, Mapping, Point, TetMesh};
use crate::sparse::SparseMatrix;

/// Per-coordinate Dirichlet data: `(vertex, β)` pairs for `u`, `v` and `w`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConditions {
    #[serde(default)]
    pub u: Vec<(usize, f64)>,
    #[serde(default)]
    pub v: Vec<(usize, f64)>,
    #[serde(default)]
    pub w: Vec<(usize, f64)>,
}

impl BoundaryConditions {
    pub fn get(&self, c: Coordinate) -> &[(usize, f64)] {
        match c {
            Coordinate::U => &self.u,
            Coordinate::V => &self.v,
            Coordinate::W => &self.w,
        }
    }

    pub fn get_mut(&mut self, c: Coordinate) -> &mut Vec<(usize, f64)> {
        match c {
            Coordinate::U => &mut self.u,
            Coordinate::V => &mut self.v,
            Coordinate::W => &mut self.w,
        }
    }

    /// For every vertex of `mesh` on one of `planes`, the coordinate normal
    /// to that plane is fixed to its value in `images`. Vertices on several
    /// planes get several coordinates fixed.
    pub fn from_planes(mesh: &TetMesh, planes: &[AxisPlane], images: &[Point]) -> BoundaryConditions {
        let mut bc = BoundaryConditions::default();
        for c in Coordinate::ALL {
            let axis_planes: Vec<AxisPlane> =
                planes.iter().copied().filter(|p| p.axis == c.index()).collect();
            *bc.get_mut(c) = boundary_vertices(mesh, &axis_planes)
                .into_iter()
                .map(|i| (i, images[i][c.index()]))
                .collect();
        }
        bc
    }

    /// Face-sliding conditions on the six faces of the source bounding box,
    /// with values taken from the mapping's images.
    pub fn cube_faces(mapping: &Mapping) -> BoundaryConditions {
        let (lo, hi) = mapping.source().bounding_box();
        let planes = AxisPlane::box_faces(lo.into(), hi.into());
        Self::from_planes(mapping.source(), &planes, mapping.images())
    }

    /// All three coordinates of each listed vertex fixed to `images`.
    pub fn pin_vertices(vertices: &[usize], images: &[Point]) -> BoundaryConditions {
        let mut bc = BoundaryConditions::default();
        for c in Coordinate::ALL {
            *bc.get_mut(c) = vertices.iter().map(|&i| (i, images[i][c.index()])).collect();
        }
        bc
    }

    /// Every surface vertex pinned to its image.
    pub fn surface(mapping: &Mapping) -> BoundaryConditions {
        Self::pin_vertices(&surface_vertices(mapping.source()), mapping.images())
    }

    /// Union of two condition sets; on a shared vertex `other` wins. The
    /// result is sorted by vertex index.
    pub fn merged(&self, other: &BoundaryConditions) -> BoundaryConditions {
        let mut bc = BoundaryConditions::default();
        for c in Coordinate::ALL {
            let map: BTreeMap<usize, f64> = self.get(c).iter().chain(other.get(c)).copied().collect();
            *bc.get_mut(c) = map.into_iter().collect();
        }
        bc
    }

    pub fn is_constrained(&self, c: Coordinate, vertex: usize) -> bool {
        self.get(c).iter().any(|&(i, _)| i == vertex)
    }

    /// Checks index ranges, distinctness, finiteness and that every
    /// coordinate has at least one constraint.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut empty = Vec::new();
        for c in Coordinate::ALL {
            let entries = self.get(c);
            if entries.is_empty() {
                empty.push(c);
                continue;
            }
            let mut seen = vec![false; n];
            for &(i, beta) in entries {
                if i >= n {
                    return Err(Error::InvalidBoundary {
                        coordinate: c,
                        msg: format!("vertex {i} out of range (mesh has {n} vertices)"),
                    });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidBoundary {
                        coordinate: c,
                        msg: format!("vertex {i} constrained twice"),
                    });
                }
                if !beta.is_finite() {
                    return Err(Error::InvalidBoundary {
                        coordinate: c,
                        msg: format!("vertex {i} has non-finite value {beta}"),
                    });
                }
            }
        }
        if !empty.is_empty() {
            return Err(Error::SingularSystem { coordinates: empty });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("boundary conditions always serialize")
    }

    pub fn from_json(bytes: &[u8]) -> Result<BoundaryConditions> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

/// The three masked systems `𝒞_c x = h_c`.
#[derive(Clone, Debug)]
pub struct MaskedSystems {
    pub matrices: [SparseMatrix; 3],
    pub rhs: [Vec<f64>; 3],
    pub constrained: [Vec<bool>; 3],
}

/// Masks `c` for each coordinate: `h = −C·Σβᵢeᵢ` with constrained entries
/// replaced by `βᵢ`, constrained rows and columns zeroed, unit diagonal.
pub fn apply_boundary(c: &SparseMatrix, bc: &BoundaryConditions) -> Result<MaskedSystems> {
    let n = c.n();
    bc.validate(n)?;
    let per = Coordinate::ALL.map(|coord| {
        let mut constrained = vec![false; n];
        let mut beta = vec![0.0; n];
        for &(i, b) in bc.get(coord) {
            constrained[i] = true;
            beta[i] = b;
        }
        let mut h: Vec<f64> = c.mul_vec(&beta).into_iter().map(|x| -x).collect();
        for &(i, b) in bc.get(coord) {
            h[i] = b;
        }
        (c.masked(&constrained), h, constrained)
    });
    let [(mu, hu, cu), (mv, hv, cv), (mw, hw, cw)] = per;
    Ok(MaskedSystems {
        matrices: [mu, mv, mw],
        rhs: [hu, hv, hw],
        constrained: [cu, cv, cw],
    })
}
