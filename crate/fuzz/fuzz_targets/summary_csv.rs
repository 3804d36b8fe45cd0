#![no_main]

use libfuzzer_sys::fuzz_target;
use semg_meet_cli::report::{bar_chart_svg, metric_csv, parse_summary, text_report};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_summary(text) {
        let _ = metric_csv(&rows, "accuracy");
        let _ = bar_chart_svg(&rows, "f1", "F1-score");
        let _ = text_report(&rows, &[]);
    }
});
