#![no_main]

use cusp_extend::parse::parse_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(grid) = parse_grid(text) {
            assert!(grid.validate().is_ok());
        }
    }
});
