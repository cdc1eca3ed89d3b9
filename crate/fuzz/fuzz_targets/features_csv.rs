#![no_main]

use libfuzzer_sys::fuzz_target;
use tepidx::io::read_features;

fuzz_target!(|data: &[u8]| {
    let _ = read_features(data, "fuzz.csv");
});
