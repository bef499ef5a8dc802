#![no_main]

use libfuzzer_sys::fuzz_target;
use subspace_anomaly::io::{labels_to_csv, parse_labels};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(labels) = parse_labels(text) {
        assert_eq!(parse_labels(&labels_to_csv(&labels)).unwrap(), labels);
    }
});
