#![no_main]

use libfuzzer_sys::fuzz_target;
use tepidx::io::read_detections;

fuzz_target!(|data: &[u8]| {
    let _ = read_detections(data, "fuzz.csv");
});
