#![no_main]

use libfuzzer_sys::fuzz_target;
use renyi_quant::experiments::{apply_override, ExperimentConfig};

const BASE: &str = r#"{"source": {"family": "gaussian", "sigma": 1.0}, "alpha": 0.5, "n_grid": [4, 8]}"#;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let specs: Vec<&str> = text.lines().take(8).collect();
    let mut value: serde_json::Value = serde_json::from_str(BASE).unwrap();
    for spec in &specs {
        if apply_override(&mut value, spec).is_err() {
            return;
        }
    }
    let _ = ExperimentConfig::from_value(value);
    let _ = ExperimentConfig::from_json_with_overrides(BASE, &specs);
});
