#![no_main]

use libfuzzer_sys::fuzz_target;
use tepidx::io::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_toml(text) {
        let _ = cfg.config_hash();
        if let Ok(again) = cfg.to_toml() {
            assert_eq!(RunConfig::from_toml(&again).unwrap(), cfg);
        }
    }
});
