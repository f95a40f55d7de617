#![no_main]

use blocktau::io::{read_tabulated_generator, read_tabulated_kernel};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(g) = read_tabulated_generator(data) {
        for u in [0.0, 0.5, 1.0, 10.0, 1e6] {
            let v = g.eval(u);
            assert!(v >= 0.0 && !v.is_nan());
        }
    }
    if let Ok(k) = read_tabulated_kernel(data) {
        for u in [-2.0, -0.5, 0.0, 0.25, 3.0] {
            let v = k.eval(u);
            assert!(v >= 0.0 && v.is_finite());
        }
    }
});
