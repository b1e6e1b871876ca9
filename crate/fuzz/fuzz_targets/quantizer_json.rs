#![no_main]

use libfuzzer_sys::fuzz_target;
use renyi_quant::Quantizer;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(q) = Quantizer::from_json(text) {
        let back = Quantizer::from_json(&q.to_json()).expect("round trip");
        assert_eq!(back, q);
        for &x in q.codepoints() {
            let k = q.cell_index(x);
            assert!(k < q.codepoints().len());
        }
    }
});
