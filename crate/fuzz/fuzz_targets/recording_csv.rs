#![no_main]

use libfuzzer_sys::fuzz_target;
use semg_meet::dataset::{parse_recording_csv, recording_to_csv, ClassSet, RecordingSchema};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let mut schema = RecordingSchema::new(ClassSet::gestures());
    schema.default_sample_rate_hz = Some(2000.0);
    if let Ok(rec) = parse_recording_csv(text, &schema) {
        let again = parse_recording_csv(&recording_to_csv(&rec, &schema.classes), &schema)
            .expect("written recordings parse");
        assert_eq!(again, rec);
    }
});
