#![no_main]

use libfuzzer_sys::fuzz_target;
use qc3d::QcRep;

fuzz_target!(|data: &[u8]| {
    if let Ok(rep) = QcRep::from_bytes(data) {
        assert_eq!(rep.to_bytes(), data);
    }
});
