#![no_main]

use libfuzzer_sys::fuzz_target;
use semg_meet::models::ModelFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = ModelFile::from_text(text) {
        let model = file.model.as_classifier();
        let x = vec![0.5; model.feature_count()];
        let p = model.predict_posterior(&x).expect("validated models predict");
        assert_eq!(p.len(), model.class_count());
        let again = ModelFile::from_text(&file.to_text()).expect("written models load");
        assert_eq!(again, file);
    }
});
