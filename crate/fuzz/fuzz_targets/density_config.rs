#![no_main]

use libfuzzer_sys::fuzz_target;
use renyi_quant::DensityConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = DensityConfig::from_json(text) {
        let (lo, hi) = (d.quantile(0.25), d.quantile(0.75));
        if let (Ok(lo), Ok(hi)) = (lo, hi) {
            assert!(lo <= hi, "quantiles out of order: {lo} > {hi}");
        }
        let p = d.pdf(0.0);
        assert!(p >= 0.0 || p.is_nan());
    }
});
