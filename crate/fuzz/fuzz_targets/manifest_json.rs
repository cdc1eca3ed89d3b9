#![no_main]

use libfuzzer_sys::fuzz_target;
use tepidx::io::read_manifest;

fuzz_target!(|data: &[u8]| {
    let _ = read_manifest(data);
});
