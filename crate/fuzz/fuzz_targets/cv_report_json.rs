#![no_main]

use libfuzzer_sys::fuzz_target;
use tepidx::io::read_cv_report;

fuzz_target!(|data: &[u8]| {
    let _ = read_cv_report(data);
});
