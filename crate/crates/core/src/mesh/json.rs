use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Mapping, Point, TetMesh};
use crate::error::Result;

/// Canonical JSON container for a mesh, optional images and free-form
/// metadata. Tet indices are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDocument {
    pub vertices: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

fn to_array(p: &Point) -> [f64; 3] {
    [p.x, p.y, p.z]
}

fn to_point(a: &[f64; 3]) -> Point {
    Point::new(a[0], a[1], a[2])
}

impl MeshDocument {
    pub fn from_mesh(mesh: &TetMesh) -> MeshDocument {
        MeshDocument {
            vertices: mesh.vertices().iter().map(to_array).collect(),
            tets: mesh.tets().to_vec(),
            images: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn from_mapping(mapping: &Mapping) -> MeshDocument {
        let mut doc = Self::from_mesh(mapping.source());
        doc.images = Some(mapping.images().iter().map(to_array).collect());
        doc
    }

    pub fn to_mesh(&self) -> Result<TetMesh> {
        TetMesh::new(self.vertices.iter().map(to_point).collect(), self.tets.clone())
    }

    /// The mesh plus its mapping, when images are present.
    pub fn to_mapping(&self) -> Result<(Arc<TetMesh>, Option<Mapping>)> {
        let mesh = Arc::new(self.to_mesh()?);
        let mapping = self
            .images
            .as_ref()
            .map(|im| Mapping::new(mesh.clone(), im.iter().map(to_point).collect()))
            .transpose()?;
        Ok((mesh, mapping))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh documents always serialize")
    }

    pub fn from_json(bytes: &[u8]) -> Result<MeshDocument> {
        Ok(serde_json::from_slice(bytes)?)
    }
}
