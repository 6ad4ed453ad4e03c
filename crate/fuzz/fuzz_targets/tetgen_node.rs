#![no_main]

use libfuzzer_sys::fuzz_target;
use qc3d::mesh::tetgen::parse_node;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(node) = parse_node(text) {
            assert!(node.first_index <= 1);
        }
    }
});
