#![no_main]

use libfuzzer_sys::fuzz_target;
use qc3d::spectral::Spectrum;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = Spectrum::from_bytes(data) {
        assert_eq!(s.to_bytes(), data);
    }
});
