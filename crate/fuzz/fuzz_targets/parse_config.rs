#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = meshbench::cli::parse_config(text) {
        assert!(!cfg.regions.is_empty());
    }
});
