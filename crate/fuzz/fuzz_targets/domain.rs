#![no_main]

use cusp_extend::parse::parse_domain;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(domain) = parse_domain(text) {
            // Anything the parser accepts must validate and have a finite measure.
            assert!(domain.validate().is_ok());
            assert!(domain.measure().is_finite());
        }
    }
});
