#![no_main]

use libfuzzer_sys::fuzz_target;
use tepidx::io::read_metrics;

fuzz_target!(|data: &[u8]| {
    let _ = read_metrics(data, "fuzz.csv");
});
