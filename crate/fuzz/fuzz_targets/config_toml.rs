#![no_main]
use libfuzzer_sys::fuzz_target;
use palette_rjmcmc::io::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_toml_str(text) {
        let back = cfg.to_toml_string().expect("serialize parsed config");
        assert_eq!(RunConfig::from_toml_str(&back).expect("reparse"), cfg);
    }
});
