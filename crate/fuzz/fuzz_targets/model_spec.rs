#![no_main]

use libfuzzer_sys::fuzz_target;
use triload::ModelSpec;

fuzz_target!(|src: &str| {
    if let Ok(spec) = src.parse::<ModelSpec>() {
        // Anything that parses must either build or fail cleanly.
        if let Ok(model) = spec.build() {
            let _ = model.sup_norm();
        }
    }
});
