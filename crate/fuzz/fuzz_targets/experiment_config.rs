#![no_main]

use libfuzzer_sys::fuzz_target;
use renyi_quant::experiments::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        let again = ExperimentConfig::from_json(&cfg.to_json()).expect("valid config re-parses");
        assert_eq!(again, cfg);
        let _ = cfg.build_source();
        let _ = cfg.build_mismatch_source();
    }
});
