#![no_main]

use libfuzzer_sys::fuzz_target;
use qc3d::mesh::MeshDocument;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = MeshDocument::from_json(data) {
        let _ = doc.to_mapping();
    }
});
