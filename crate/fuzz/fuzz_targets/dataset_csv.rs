#![no_main]
use libfuzzer_sys::fuzz_target;
use palette_rjmcmc::io::parse_dataset_csv;

fuzz_target!(|data: &[u8]| {
    let _ = parse_dataset_csv(data, "fuzz", &["y", "S", "L"]);
    let _ = parse_dataset_csv(data, "fuzz", &[]);
});
