use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn semg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semg-meet"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SHORT_SYNTH: &str = "synth_duration_s = 3.0\nsynth_repetitions = 3\ntrees = 20\n";

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&semg(&["--help"], d)), 0);
    assert_eq!(code(&semg(&["--version"], d)), 0);
    assert_eq!(code(&semg(&[], d)), 1);
    assert_eq!(code(&semg(&["frobnicate"], d)), 1);
    // no seed anywhere
    let o = semg(&["synth", "--out", "x"], d);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("seed"));

    fs::write(d.join("bad.toml"), "tress = 10\n").unwrap();
    let o = semg(
        &["synth", "--config", "bad.toml", "--seed", "1", "--out", "x"],
        d,
    );
    assert_eq!(code(&o), 1);
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("short.csv"),
        "# sample_rate_hz=2000\nch1,ch2,label\n0.1,0.2,TE\n0.1,0.3,TE\n",
    )
    .unwrap();
    let o = semg(&["features", "--input", "short.csv", "--out", "f.csv"], d);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("needs 512"), "{}", stderr(&o));

    let mut bad = String::from("# sample_rate_hz=2000\nch1,ch2,label\n");
    for _ in 0..4 {
        bad.push_str("0.1,0.2,TE\n");
    }
    bad.push_str("0.1,oops,TE\n");
    fs::write(d.join("bad.csv"), bad).unwrap();
    let o = semg(&["features", "--input", "bad.csv", "--out", "f.csv"], d);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));

    let o = semg(&["features", "--input", "missing.csv", "--out", "f.csv"], d);
    assert_eq!(code(&o), 2);
}

#[test]
fn pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("cfg.toml"), SHORT_SYNTH).unwrap();

    let o = semg(
        &[
            "synth", "--config", "cfg.toml", "--seed", "9", "--out", "rec",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_dir(d.join("rec")).unwrap().count(), 6 * 3 + 1);
    assert!(d.join("rec/manifest.toml").is_file());

    let o = semg(
        &[
            "features",
            "--config",
            "cfg.toml",
            "--input",
            "rec",
            "--out",
            "feat/all.csv",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(d.join("feat/all.manifest.toml").is_file());

    let o = semg(
        &[
            "split",
            "--input",
            "feat/all.csv",
            "--train-out",
            "feat/train.csv",
            "--test-out",
            "feat/test.csv",
            "--seed",
            "3",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = semg(
        &[
            "train",
            "--config",
            "cfg.toml",
            "--input",
            "feat/train.csv",
            "--model",
            "meet",
            "--out",
            "m/meet.json",
            "--seed",
            "4",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = fs::read_to_string(d.join("m/meet.manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"train\""));
    assert!(manifest.contains("meet.json"));

    // a tree ensemble reproduces its own training set
    let o = semg(
        &[
            "evaluate",
            "--model",
            "m/meet.json",
            "--input",
            "feat/train.csv",
            "--out",
            "eval_train",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = fs::read_to_string(d.join("eval_train/summary.csv")).unwrap();
    let acc: f64 = summary
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(4)
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc >= 0.99, "train accuracy {acc}");

    let o = semg(
        &[
            "evaluate",
            "--model",
            "m/meet.json",
            "--input",
            "feat/test.csv",
            "--out",
            "eval_test",
            "--subject",
            "P7",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(d.join("eval_test/confusion/P7_meet_percent.csv").is_file());

    let o = semg(&["report", "--input", "eval_test"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in [
        "accuracy.csv",
        "accuracy.svg",
        "f1.svg",
        "confusion_P7_meet.svg",
        "report.txt",
        "manifest.toml",
    ] {
        assert!(d.join("eval_test/figures").join(f).is_file(), "{f}");
    }
    assert!(stdout(&o).contains("meet"));

    // model errors exit 3
    fs::write(d.join("m/broken.json"), "{\"format\": \"semg-meet-model\"}").unwrap();
    let o = semg(
        &[
            "evaluate",
            "--model",
            "m/broken.json",
            "--input",
            "feat/test.csv",
            "--out",
            "e",
        ],
        d,
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = semg(
        &[
            "train",
            "--input",
            "feat/train.csv",
            "--model",
            "svm",
            "--out",
            "x.json",
            "--seed",
            "1",
        ],
        d,
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn experiment_is_reproducible_and_records_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("exp.toml"),
        format!("{SHORT_SYNTH}seed = 5\nsubjects = [\"A\", \"B\"]\nmodels = [\"et\", \"meet\", \"nb\"]\noutput_dir = \"from_config\"\n"),
    )
    .unwrap();
    let o = semg(&["experiment", "--config", "exp.toml"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = semg(
        &[
            "--threads",
            "2",
            "experiment",
            "--config",
            "exp.toml",
            "--out",
            "second",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in [
        "summary.csv",
        "metrics.csv",
        "manifest.toml",
        "features/A.csv",
        "confusion/B_meet_counts.csv",
    ] {
        assert_eq!(
            fs::read(d.join("from_config").join(f)).unwrap(),
            fs::read(d.join("second").join(f)).unwrap(),
            "{f}"
        );
    }
    let manifest = fs::read_to_string(d.join("second/manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 5"));
    assert!(manifest.contains("\"summary.csv\" = "));
    let summary = fs::read_to_string(d.join("second/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 3);

    // a different seed changes the results
    let o = semg(
        &[
            "experiment",
            "--config",
            "exp.toml",
            "--seed",
            "6",
            "--out",
            "third",
        ],
        d,
    );
    assert_eq!(code(&o), 0);
    assert_ne!(
        fs::read(d.join("second/summary.csv")).unwrap(),
        fs::read(d.join("third/summary.csv")).unwrap()
    );
}
