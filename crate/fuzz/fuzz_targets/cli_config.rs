#![no_main]

use libfuzzer_sys::fuzz_target;
use triload_cli::CliConfig;

fuzz_target!(|src: &str| {
    let Ok(cfg) = CliConfig::from_config_or_summary(src) else { return };
    let _ = cfg.validate();
    // A parsed config must survive its own serialisation.
    let back = CliConfig::from_json(&cfg.to_json()).expect("re-parse");
    assert_eq!(back.provenance().to_json(), cfg.provenance().to_json());
});
