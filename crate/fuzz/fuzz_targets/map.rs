#![no_main]

use cusp_extend::parse::parse_map;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = parse_map(text) {
            let map = spec.build();
            let _ = map.jet_at(&vec![0.3; spec.dimension()]);
        }
    }
});
