#![no_main]

use libfuzzer_sys::fuzz_target;
use qc3d::QcRep;

fuzz_target!(|data: &[u8]| {
    let _ = QcRep::from_json(data);
});
