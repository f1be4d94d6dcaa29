#![no_main]

use cusp_extend::extension::FunctionManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(manifest) = FunctionManifest::from_toml(text) {
            let _ = manifest.validate(2);
        }
    }
});
