//! Replays the checked-in fuzz corpus through the same checks the fuzz
//! targets make.

use std::fs;
use std::path::PathBuf;

use semg_meet::dataset::{parse_recording_csv, recording_to_csv, ClassSet, Dataset, RecordingSchema};
use semg_meet::models::ModelFile;
use semg_meet_cli::config::PipelineConfig;
use semg_meet_cli::report::{heatmap_svg, parse_percent_matrix, parse_summary, text_report};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn recording_seeds() {
    let mut schema = RecordingSchema::new(ClassSet::gestures());
    schema.default_sample_rate_hz = Some(2000.0);
    for (name, text) in seeds("recording_csv") {
        let parsed = parse_recording_csv(&text, &schema);
        assert_eq!(parsed.is_ok(), !name.starts_with("bad"), "{name}");
        if let Ok(rec) = parsed {
            let again = parse_recording_csv(&recording_to_csv(&rec, &schema.classes), &schema).unwrap();
            assert_eq!(again, rec, "{name}");
        }
    }
}

#[test]
fn feature_seeds() {
    for (name, text) in seeds("feature_csv") {
        let ds = Dataset::from_csv(&text, Some(&ClassSet::gestures()));
        if name == "no_classes.csv" {
            // labels x, y are not gestures
            assert!(ds.is_err());
            continue;
        }
        let ds = ds.unwrap();
        let again = Dataset::from_csv(&ds.to_csv(), None).unwrap();
        assert_eq!(again.labels, ds.labels, "{name}");
    }
}

#[test]
fn model_seeds() {
    for (name, text) in seeds("model_file") {
        let file = ModelFile::from_text(&text);
        assert_eq!(file.is_ok(), name != "truncated.json", "{name}");
        if let Ok(file) = file {
            let c = file.model.as_classifier();
            let p = c.predict_posterior(&vec![0.5; c.feature_count()]).unwrap();
            assert_eq!(p.len(), c.class_count());
            assert_eq!(ModelFile::from_text(&file.to_text()).unwrap(), file);
        }
    }
}

#[test]
fn config_seeds() {
    for (name, text) in seeds("pipeline_config") {
        let cfg = PipelineConfig::from_toml(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg, "{name}");
        cfg.model_kinds().unwrap();
        cfg.synth_spec(0).validate().unwrap();
    }
}

#[test]
fn report_seeds() {
    for (name, text) in seeds("summary_csv") {
        let rows = parse_summary(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!text_report(&rows, &[]).is_empty());
    }
    for (name, text) in seeds("percent_matrix") {
        let m = parse_percent_matrix(&text, "x").unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(heatmap_svg(&m).starts_with("<svg"));
    }
}
