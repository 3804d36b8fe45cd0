#![no_main]

use libfuzzer_sys::fuzz_target;
use semg_meet_cli::report::{heatmap_svg, parse_percent_matrix};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_percent_matrix(text, "S1_meet") {
        let _ = heatmap_svg(&m);
    }
});
