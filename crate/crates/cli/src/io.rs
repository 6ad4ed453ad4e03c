use std::path::{Path, PathBuf};
use std::sync::Arc;

use qc3d::mesh::tetgen::{load_tetgen, parse_node, write_ele, write_node};
use qc3d::mesh::MeshDocument;
use qc3d::{Mapping, Point, QcRep, TetMesh};

use crate::args::MeshArgs;
use crate::CliError;

fn is_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

pub fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::input(format!("{}: no such file", path.display())))
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, data).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn tetgen_pair(path: &Path) -> (PathBuf, PathBuf) {
    if is_ext(path, "node") || is_ext(path, "ele") {
        (path.with_extension("node"), path.with_extension("ele"))
    } else {
        let stem = path.as_os_str().to_owned();
        let mut node = stem.clone();
        node.push(".node");
        let mut ele = stem;
        ele.push(".ele");
        (node.into(), ele.into())
    }
}

fn with_path<T>(path: &Path, r: qc3d::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from(e).context(path))
}

/// Mesh plus the images stored alongside it, if any.
pub fn load_mesh(path: &Path) -> Result<(Arc<TetMesh>, Option<Vec<Point>>), CliError> {
    if is_ext(path, "json") {
        require_file(path)?;
        let doc = with_path(path, MeshDocument::from_json(&read(path)?))?;
        let (mesh, mapping) = with_path(path, doc.to_mapping())?;
        return Ok((mesh, mapping.map(Mapping::into_images)));
    }
    let (node, ele) = tetgen_pair(path);
    require_file(&node)?;
    require_file(&ele)?;
    Ok((Arc::new(with_path(path, load_tetgen(&node, &ele))?), None))
}

pub fn load_points(path: &Path) -> Result<Vec<Point>, CliError> {
    require_file(path)?;
    let text = String::from_utf8(read(path)?)
        .map_err(|_| CliError::input(format!("{}: not UTF-8 text", path.display())))?;
    Ok(with_path(path, parse_node(&text))?.points)
}

pub fn load_mapping(args: &MeshArgs) -> Result<Mapping, CliError> {
    let (mesh, embedded) = load_mesh(&args.mesh)?;
    let images = match &args.images {
        Some(p) => load_points(p)?,
        None => embedded
            .ok_or_else(|| CliError::input(format!("{}: no images; pass --images", args.mesh.display())))?,
    };
    with_path(
        args.images.as_deref().unwrap_or(&args.mesh),
        Mapping::new(mesh, images),
    )
}

pub fn load_truth(mesh: &Arc<TetMesh>, path: Option<&Path>) -> Result<Option<Mapping>, CliError> {
    path.map(|p| with_path(p, Mapping::new(mesh.clone(), load_points(p)?)))
        .transpose()
}

pub fn load_rep(path: &Path) -> Result<QcRep, CliError> {
    require_file(path)?;
    let data = read(path)?;
    with_path(
        path,
        if is_ext(path, "json") {
            QcRep::from_json(&data)
        } else {
            QcRep::from_bytes(&data)
        },
    )
}

pub fn save_rep(rep: &QcRep, path: &Path) -> Result<(), CliError> {
    if is_ext(path, "json") {
        write(path, rep.to_json())
    } else {
        write(path, rep.to_bytes())
    }
}

/// `.json` writes a mesh document with images, anything else a `.node`
/// file of the images.
pub fn save_mapping(mapping: &Mapping, path: &Path) -> Result<(), CliError> {
    if is_ext(path, "json") {
        write(path, MeshDocument::from_mapping(mapping).to_json())
    } else {
        write(path, write_node(mapping.images()))
    }
}

pub fn save_points(points: &[Point], path: &Path) -> Result<(), CliError> {
    write(path, write_node(points))
}

pub fn save_ele(mesh: &TetMesh, path: &Path) -> Result<(), CliError> {
    write(path, write_ele(mesh.tets()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tetgen_pairs() {
        let (n, e) = tetgen_pair(Path::new("a/cube.node"));
        assert_eq!(
            (n.to_str().unwrap(), e.to_str().unwrap()),
            ("a/cube.node", "a/cube.ele")
        );
        let (n, e) = tetgen_pair(Path::new("a/cube.1"));
        assert_eq!(
            (n.to_str().unwrap(), e.to_str().unwrap()),
            ("a/cube.1.node", "a/cube.1.ele")
        );
    }
}
