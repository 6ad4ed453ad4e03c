#![no_main]

use libfuzzer_sys::fuzz_target;
use qc3d::interp::{parse_landmarks, write_landmarks};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(idx) = parse_landmarks(text) {
            assert_eq!(parse_landmarks(&write_landmarks(&idx)).unwrap(), idx);
        }
    }
});
