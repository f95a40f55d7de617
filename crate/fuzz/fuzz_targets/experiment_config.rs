#![no_main]

use blocktau::simulation::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // parsing and validation only; running an experiment is not bounded
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        assert!(cfg.replications >= 2);
    }
});
