#![no_main]

use libfuzzer_sys::fuzz_target;
use triload::allocation::{allocate_greedy, load, parse_instance};

fuzz_target!(|src: &str| {
    let Ok(inst) = parse_instance(src) else { return };
    if inst.points().len() <= 10_000 {
        let _ = load(&inst, &allocate_greedy(&inst));
    }
});
