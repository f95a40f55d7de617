#![no_main]

use blocktau::io::{read_observations, LoadOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&flags, body)) = data.split_first() else {
        return;
    };
    let options = LoadOptions {
        header: flags & 1 != 0,
        strict: flags & 2 != 0,
        delimiter: if flags & 4 != 0 { b';' } else { b',' },
    };
    if let Ok(report) = read_observations(body, options) {
        // every surviving value is finite and the shape is consistent
        let d = &report.data;
        assert!(d.n() >= 2);
        for j in 0..d.p() {
            assert_eq!(d.column(j).len(), d.n());
            assert!(d.column(j).iter().all(|v| v.is_finite()));
        }
    }
});
