#![no_main]

use libfuzzer_sys::fuzz_target;
use semg_meet_cli::config::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = PipelineConfig::from_toml(text) {
        let _ = cfg.model_kinds();
        let _ = cfg.class_set();
        let _ = cfg.filter_spec();
        let _ = cfg.window_spec();
        let _ = cfg.feature_spec();
        let _ = cfg.hyperparameters();
        let _ = cfg.synth_spec(0).validate();
        let again = PipelineConfig::from_toml(&cfg.to_toml()).expect("echoed configs parse");
        assert_eq!(again, cfg);
    }
});
