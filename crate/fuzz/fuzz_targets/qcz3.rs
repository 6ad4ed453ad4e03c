#![no_main]

use libfuzzer_sys::fuzz_target;
use qc3d::spectral::CompressedMapping;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = CompressedMapping::from_bytes(data) {
        let _ = CompressedMapping::from_bytes(&c.to_bytes()).expect("re-encoded container parses");
    }
});
