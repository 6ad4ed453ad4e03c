#![no_main]

use libfuzzer_sys::fuzz_target;
use qc3d::mesh::tetgen::{mesh_from_files, parse_ele, parse_node};

// Input: a node file and an ele file separated by a NUL byte.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (node, ele) = text
        .split_once('\0')
        .unwrap_or(("4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n", text));
    let Ok(ele) = parse_ele(ele) else { return };
    if let Ok(node) = parse_node(node) {
        if let Ok(mesh) = mesh_from_files(node, ele) {
            assert!(mesh.tets().iter().flatten().all(|&i| i < mesh.n_vertices()));
        }
    }
});
