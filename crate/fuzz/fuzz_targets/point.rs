#![no_main]

use cusp_extend::parse::{parse_map, parse_point};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(point) = parse_point(text) {
            let map = parse_map("cusp2d:gamma=1").unwrap();
            let _ = map.evaluate(&point);
        }
    }
});
