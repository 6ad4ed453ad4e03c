//! Replays the checked-in fuzz corpus through the same entry points as the
//! fuzz targets, so regressions surface without a fuzzing toolchain.

use std::path::{Path, PathBuf};

use qc3d::interp::{parse_landmarks, write_landmarks};
use qc3d::lbs3d::BoundaryConditions;
use qc3d::mesh::tetgen::{mesh_from_files, parse_ele, parse_node};
use qc3d::mesh::MeshDocument;
use qc3d::spectral::{CompressedMapping, Spectrum};
use qc3d::QcRep;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let data = std::fs::read(&p).unwrap();
            (p, data)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Returns how many seeds parsed.
fn replay(target: &str, f: impl Fn(&[u8]) -> bool) -> usize {
    seeds(target).iter().filter(|(_, data)| f(data)).count()
}

#[test]
fn tetgen_node() {
    let parsed = replay("tetgen_node", |d| {
        std::str::from_utf8(d)
            .ok()
            .and_then(|t| parse_node(t).ok())
            .is_some()
    });
    assert_eq!(parsed, 2);
}

#[test]
fn tetgen_ele() {
    let parsed = replay("tetgen_ele", |d| {
        let Ok(text) = std::str::from_utf8(d) else {
            return false;
        };
        let (node, ele) = text
            .split_once('\0')
            .unwrap_or(("4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n", text));
        let (Ok(node), Ok(ele)) = (parse_node(node), parse_ele(ele)) else {
            return false;
        };
        mesh_from_files(node, ele).is_ok()
    });
    assert_eq!(parsed, 2);
}

#[test]
fn mesh_json() {
    let parsed = replay("mesh_json", |d| {
        MeshDocument::from_json(d).is_ok_and(|doc| doc.to_mapping().is_ok())
    });
    assert_eq!(parsed, 1);
}

#[test]
fn binary_containers_round_trip() {
    let qcr = replay("qcr3", |d| QcRep::from_bytes(d).is_ok_and(|r| r.to_bytes() == d));
    let qsp = replay("qsp3", |d| {
        Spectrum::from_bytes(d).is_ok_and(|s| s.to_bytes() == d)
    });
    let qcz = replay("qcz3", |d| {
        CompressedMapping::from_bytes(d).is_ok_and(|c| c.to_bytes() == d)
    });
    assert_eq!((qcr, qsp, qcz), (1, 1, 1));
}

#[test]
fn json_inputs() {
    assert_eq!(replay("rep_json", |d| QcRep::from_json(d).is_ok()), 1);
    let valid = replay("boundary_json", |d| {
        BoundaryConditions::from_json(d).is_ok_and(|bc| bc.validate(8).is_ok())
    });
    assert_eq!(valid, 1);
}

#[test]
fn landmarks() {
    let parsed = replay("landmarks", |d| {
        let Ok(text) = std::str::from_utf8(d) else {
            return false;
        };
        parse_landmarks(text).is_ok_and(|idx| parse_landmarks(&write_landmarks(&idx)).unwrap() == idx)
    });
    assert_eq!(parsed, 1);
}
