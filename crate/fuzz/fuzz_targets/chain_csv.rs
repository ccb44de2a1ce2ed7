#![no_main]
use libfuzzer_sys::fuzz_target;
use palette_rjmcmc::io::parse_chain_csv;

fuzz_target!(|data: &[u8]| {
    if let Some((&dim, rest)) = data.split_first() {
        let _ = parse_chain_csv(rest, "fuzz", (dim % 8) as usize);
    }
});
