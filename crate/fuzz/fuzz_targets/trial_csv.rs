#![no_main]

use libfuzzer_sys::fuzz_target;
use tepidx::io::{read_trials, write_trials};

fuzz_target!(|data: &[u8]| {
    if let Ok((set, report)) = read_trials(data, "fuzz.csv") {
        // anything accepted must survive a write-read cycle unchanged
        let mut buf = Vec::new();
        write_trials(&mut buf, &set, report.header.as_ref()).unwrap();
        let (back, _) = read_trials(buf.as_slice(), "again.csv").unwrap();
        assert_eq!(back, set);
    }
});
