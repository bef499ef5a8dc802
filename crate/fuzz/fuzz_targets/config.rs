#![no_main]

use libfuzzer_sys::fuzz_target;
use subspace_anomaly::cli::{CliConfig, CommandKind};
use subspace_anomaly::io::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(entries) = parse_config(text) else {
        return;
    };
    let mut cfg = CliConfig::default();
    if cfg.apply_entries(&entries).is_ok() {
        let echo = cfg.echo(CommandKind::Detect);
        let mut back = CliConfig::default();
        back.apply_entries(&parse_config(&echo).expect("echo parses"))
            .expect("echo applies");
        assert_eq!(back, cfg);
    }
});
