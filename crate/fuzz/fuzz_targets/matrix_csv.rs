#![no_main]

use blocktau::io::{read_matrix_csv, write_matrix_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_matrix_csv(data) {
        assert_eq!(m.values.nrows(), m.names.len());
        // writing and reading again is stable
        let mut first = Vec::new();
        if write_matrix_csv(&m.values, &m.names, &mut first).is_ok() {
            if let Ok(back) = read_matrix_csv(first.as_slice()) {
                let mut second = Vec::new();
                write_matrix_csv(&back.values, &back.names, &mut second).unwrap();
                assert_eq!(first, second);
            }
        }
    }
});
