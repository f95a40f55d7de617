#![no_main]

use blocktau::io::{parse_grid, parse_number_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = parse_grid(text) {
        assert!(!grid.is_empty());
        assert!(grid.points().iter().flatten().all(|v| v.is_finite()));
    }
    let _ = parse_number_list(text);
});
