#![no_main]

use libfuzzer_sys::fuzz_target;
use semg_meet::dataset::{ClassSet, Dataset};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ds) = Dataset::from_csv(text, Some(&ClassSet::gestures())) {
        let again = Dataset::from_csv(&ds.to_csv(), None).expect("written datasets parse");
        assert_eq!(again.labels, ds.labels);
        assert_eq!(again.feature_names, ds.feature_names);
    }
});
