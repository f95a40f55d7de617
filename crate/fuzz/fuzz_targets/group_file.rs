#![no_main]

use blocktau::io::read_group_file;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&p, body)) = data.split_first() else {
        return;
    };
    let p = (p % 16) as usize + 1;
    let names: Vec<String> = (0..p).map(|j| format!("c{j}")).collect();
    if let Ok(partition) = read_group_file(body, Some(&names), p) {
        assert_eq!(partition.p(), p);
        let total: usize = partition.group_sizes().iter().sum();
        assert_eq!(total, p);
    }
    let _ = read_group_file(body, None, p);
});
