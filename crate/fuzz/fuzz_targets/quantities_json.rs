#![no_main]

use blocktau::io::{parse_quantities_json, parse_variance_request};
use blocktau::variance::finite_sample_variance;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_quantities_json(text);
    if let Ok(req) = parse_variance_request(text) {
        if let Ok(v) = finite_sample_variance(&req.input()) {
            assert!(v.value >= 0.0);
        }
    }
});
