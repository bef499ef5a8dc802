#![no_main]

use libfuzzer_sys::fuzz_target;
use subspace_anomaly::io::{matrix_to_csv, parse_matrix_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_matrix_csv(text) {
        let back = parse_matrix_csv(&matrix_to_csv(&m)).expect("written matrix parses");
        assert_eq!(back.shape(), m.shape());
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
});
