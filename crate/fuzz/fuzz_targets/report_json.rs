#![no_main]
use libfuzzer_sys::fuzz_target;
use palette_rjmcmc::io::{parse_report_json, render_probabilities_csv, render_text};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = parse_report_json(text) {
        let _ = render_text(&report);
        let _ = render_probabilities_csv(&report);
    }
});
