#![no_main]

use libfuzzer_sys::fuzz_target;
use tepidx::io::read_pulses;

fuzz_target!(|data: &[u8]| {
    let _ = read_pulses(data, "fuzz.csv");
});
