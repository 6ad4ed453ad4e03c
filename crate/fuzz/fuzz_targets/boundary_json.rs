#![no_main]

use libfuzzer_sys::fuzz_target;
use qc3d::lbs3d::BoundaryConditions;

fuzz_target!(|data: &[u8]| {
    if let Ok(bc) = BoundaryConditions::from_json(data) {
        let _ = bc.validate(64);
    }
});
