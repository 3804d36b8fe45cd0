//! Command-line front end for the `semg-meet` pipeline.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 model error. Failures print one diagnostic line to stderr.

pub mod config;
pub mod manifest;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use semg_meet::dataset::{
    build_dataset, generate_synthetic, load_recording_csv, stratified_split, write_synthetic,
    ClassSet, Dataset, DatasetError, RecordingSchema,
};
use semg_meet::eval::{
    evaluate_model, run_cells, valid_subject_id, write_reports, EvalError, ExperimentConfig,
    ExperimentOutcome, Subject,
};
use semg_meet::models::{fit_model, ModelError, ModelFile, ModelKind};
use semg_meet::rng::derive_seed;
use semg_meet::signal::Recording;
use thiserror::Error;

use config::{one_line, DataSource, PipelineConfig};
use manifest::{sidecar_path, Manifest, MANIFEST_NAME};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Model(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Model(_) => 3,
        }
    }
}

impl From<semg_meet::Error> for CliError {
    fn from(e: semg_meet::Error) -> Self {
        match e {
            semg_meet::Error::Model(e) => e.into(),
            semg_meet::Error::Eval(e) => e.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(_) | EvalError::InvalidSubject(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "semg-meet",
    version,
    about = "sEMG gesture classification pipeline"
)]
struct Cli {
    /// Worker threads; defaults to one per core. Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate labelled synthetic recordings, one CSV per gesture repetition.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter, window and featurize recordings into a feature-matrix CSV.
    Features {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Recording CSVs or directories of them.
        #[arg(long = "input", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified train/test split of a feature-matrix CSV.
    Split {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
        /// Training fraction; defaults to the config's train_fraction.
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one model on a feature-matrix CSV.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        /// dt, rf, adb, bag, lr, nb, knn, et or meet.
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a saved model on a feature-matrix CSV and write reports.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "S1")]
        subject: String,
    },
    /// Split, train and test every subject x model cell.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tables and figure data from an experiment directory.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `<input>/figures`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("usage error");
            eprintln!("semg-meet: {}", first.trim_start_matches("error: "));
            return 1;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("semg-meet: {}", one_line(&e.to_string()));
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth { config, seed, out } => synth(config.as_deref(), seed, &out),
        Command::Features {
            config,
            inputs,
            out,
        } => features(config.as_deref(), &inputs, &out),
        Command::Split {
            config,
            input,
            train_out,
            test_out,
            fraction,
            seed,
        } => split(
            config.as_deref(),
            &input,
            &train_out,
            &test_out,
            fraction,
            seed,
        ),
        Command::Train {
            config,
            input,
            model,
            out,
            seed,
        } => train(config.as_deref(), &input, &model, &out, seed),
        Command::Evaluate {
            model,
            input,
            out,
            subject,
        } => evaluate(&model, &input, &out, &subject),
        Command::Experiment { config, seed, out } => experiment(&config, seed, out),
        Command::Report { input, out } => report_cmd(&input, out),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| io_err(dir, e)),
        None => Ok(()),
    }
}

/// Files listed directly, plus `*.csv` inside listed directories, sorted.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| io_err(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(CliError::Data(format!(
                    "{}: no .csv recordings",
                    p.display()
                )));
            }
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn load_recordings(
    paths: &[PathBuf],
    schema: &RecordingSchema,
) -> Result<Vec<Recording>, CliError> {
    paths
        .iter()
        .map(|p| {
            load_recording_csv(p, schema)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn schema(cfg: &PipelineConfig) -> Result<RecordingSchema, CliError> {
    let mut schema = RecordingSchema::new(cfg.class_set()?);
    schema.default_sample_rate_hz = cfg.sample_rate_hz;
    Ok(schema)
}

fn featurize(
    cfg: &PipelineConfig,
    recordings: &[Recording],
    classes: &ClassSet,
) -> Result<Dataset, CliError> {
    Ok(build_dataset(
        recordings,
        &cfg.filter_spec(),
        &cfg.window_spec(),
        &cfg.feature_spec(),
        classes,
    )?)
}

fn synth(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let seed = cfg.seed(seed)?;
    let spec = cfg.synth_spec(seed);
    let recordings = generate_synthetic(&spec)?;
    let paths = write_synthetic(out, &spec, &recordings)?;
    let mut manifest = Manifest::new("synth", Some(seed)).config(&cfg, Some(seed));
    manifest.artifacts(out, &paths)?;
    manifest.write(&out.join(MANIFEST_NAME))?;
    println!("wrote {} recordings to {}", paths.len(), out.display());
    Ok(())
}

fn features(config: Option<&Path>, inputs: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let files = expand_inputs(inputs)?;
    let recordings = load_recordings(&files, &schema(&cfg)?)?;
    let ds = featurize(&cfg, &recordings, &cfg.class_set()?)?;
    create_parent(out)?;
    ds.write_csv(out)?;
    let mut manifest = Manifest::new("features", cfg.seed)
        .argument("inputs", files.len())
        .config(&cfg, cfg.seed);
    for f in &files {
        manifest.input(f.display().to_string(), f)?;
    }
    let base = out.parent().unwrap_or(Path::new(""));
    manifest.artifacts(base, &[out.to_path_buf()])?;
    manifest.write(&sidecar_path(out))?;
    println!("wrote {} feature rows to {}", ds.len(), out.display());
    Ok(())
}

fn split(
    config: Option<&Path>,
    input: &Path,
    train_out: &Path,
    test_out: &Path,
    fraction: Option<f64>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let seed = cfg.seed(seed)?;
    let fraction = fraction.unwrap_or(cfg.train_fraction);
    let ds = Dataset::load_csv(input, Some(&cfg.class_set()?))?;
    let (train, test) =
        stratified_split(&ds, fraction, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    for (path, part) in [(train_out, &train), (test_out, &test)] {
        create_parent(path)?;
        part.write_csv(path)?;
    }
    let mut manifest = Manifest::new("split", Some(seed)).argument("fraction", fraction);
    manifest.input(input.display().to_string(), input)?;
    let base = train_out.parent().unwrap_or(Path::new(""));
    manifest.artifacts(base, &[train_out.to_path_buf(), test_out.to_path_buf()])?;
    manifest.write(&sidecar_path(train_out))?;
    println!("train {} rows, test {} rows", train.len(), test.len());
    Ok(())
}

fn train(
    config: Option<&Path>,
    input: &Path,
    model: &str,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let seed = cfg.seed(seed)?;
    let kind: ModelKind = model
        .parse()
        .map_err(|e: ModelError| CliError::Usage(e.to_string()))?;
    let ds = Dataset::load_csv(input, Some(&cfg.class_set()?))?;
    let set = ds.training_set()?;
    let model = fit_model(kind, &cfg.hyperparameters(), &set, seed)?;
    let file = ModelFile::new(kind, ds.classes.names().to_vec(), model);
    create_parent(out)?;
    fs::write(out, file.to_text()).map_err(|e| io_err(out, e))?;
    let mut manifest = Manifest::new("train", Some(seed))
        .argument("model", kind)
        .config(&cfg, Some(seed));
    manifest.input(input.display().to_string(), input)?;
    let base = out.parent().unwrap_or(Path::new(""));
    manifest.artifacts(base, &[out.to_path_buf()])?;
    manifest.write(&sidecar_path(out))?;
    println!("trained {kind} on {} rows", ds.len());
    Ok(())
}

fn load_model(path: &Path) -> Result<ModelFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    ModelFile::from_text(&text).map_err(|e| CliError::Model(format!("{}: {e}", path.display())))
}

fn evaluate(model_path: &Path, input: &Path, out: &Path, subject: &str) -> Result<(), CliError> {
    let file = load_model(model_path)?;
    let classes = ClassSet::new(file.class_names.iter().cloned())?;
    let ds = Dataset::load_csv(input, Some(&classes))?;
    if ds.classes != classes {
        return Err(CliError::Data(format!(
            "{}: classes [{}] do not match the model's [{}]",
            input.display(),
            ds.classes.names().join(","),
            classes.names().join(",")
        )));
    }
    if !valid_subject_id(subject) {
        return Err(EvalError::InvalidSubject(subject.into()).into());
    }
    let report = evaluate_model(&file.model, &ds, subject, file.kind.short_name(), 0)?;
    let accuracy = report.metrics.overall_accuracy;
    let outcome = ExperimentOutcome {
        reports: vec![report],
        failures: vec![],
    };
    let written = write_reports(&outcome, out)?;
    let mut manifest = Manifest::new("evaluate", None)
        .argument("model", file.kind)
        .argument("subject", subject);
    manifest.input(model_path.display().to_string(), model_path)?;
    manifest.input(input.display().to_string(), input)?;
    manifest.artifacts(out, &written)?;
    manifest.write(&out.join(MANIFEST_NAME))?;
    println!("{subject} {} overall accuracy {accuracy}", file.kind);
    Ok(())
}

/// Seed for the synthetic recordings of subject `index`.
pub fn synthetic_subject_seed(seed: u64, index: usize) -> u64 {
    derive_seed(derive_seed(seed, index as u64), 2)
}

fn load_subjects(
    cfg: &PipelineConfig,
    seed: u64,
    manifest: &mut Manifest,
) -> Result<Vec<Subject>, CliError> {
    let mut subjects = Vec::new();
    for (i, id) in cfg.subjects.iter().enumerate() {
        let ds = match cfg.source {
            DataSource::Synthetic => {
                let spec = cfg.synth_spec(synthetic_subject_seed(seed, i));
                let recordings: Vec<Recording> = generate_synthetic(&spec)?
                    .into_iter()
                    .map(|r| r.recording)
                    .collect();
                featurize(cfg, &recordings, &spec.class_set()?)?
            }
            DataSource::Recordings => {
                let dir = cfg.recordings_dir.as_ref().expect("validated").join(id);
                let files = expand_inputs(std::slice::from_ref(&dir))?;
                for f in &files {
                    manifest.input(manifest_key(&dir, id, f), f)?;
                }
                let recordings = load_recordings(&files, &schema(cfg)?)?;
                featurize(cfg, &recordings, &cfg.class_set()?)?
            }
        };
        subjects.push(Subject::new(id.clone(), ds)?);
    }
    Ok(subjects)
}

fn manifest_key(dir: &Path, id: &str, file: &Path) -> String {
    let name = file.strip_prefix(dir).unwrap_or(file).display().to_string();
    format!("{id}/{name}")
}

fn experiment(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(config)?;
    let seed = cfg.seed(seed)?;
    let out = out.or_else(|| cfg.output_dir.clone()).ok_or_else(|| {
        CliError::Usage("no output directory: pass --out or set output_dir".into())
    })?;
    let mut manifest = Manifest::new("experiment", Some(seed)).config(&cfg, Some(seed));
    let subjects = load_subjects(&cfg, seed, &mut manifest)?;

    let features_dir = out.join("features");
    fs::create_dir_all(&features_dir).map_err(|e| io_err(&features_dir, e))?;
    let mut written = Vec::new();
    for s in &subjects {
        let path = features_dir.join(format!("{}.csv", s.id));
        s.dataset.write_csv(&path)?;
        written.push(path);
    }

    let exp = ExperimentConfig {
        models: cfg.model_kinds()?,
        hyper: cfg.hyperparameters(),
        train_fraction: cfg.train_fraction,
        seed,
    };
    let outcome = run_cells(&subjects, &exp)?;
    written.extend(write_reports(&outcome, &out)?);
    manifest.artifacts(&out, &written)?;
    manifest.write(&out.join(MANIFEST_NAME))?;

    for r in &outcome.reports {
        println!(
            "{} {} accuracy {:.4}",
            r.subject, r.model, r.metrics.overall_accuracy
        );
    }
    if !outcome.failures.is_empty() {
        return Err(CliError::Model(format!(
            "{} of {} cells failed; see {}",
            outcome.failures.len(),
            subjects.len() * exp.models.len(),
            out.join("failures.txt").display()
        )));
    }
    Ok(())
}

fn report_cmd(input: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let out = out.unwrap_or_else(|| input.join("figures"));
    let (text, written) = report::write_report(input, &out)?;
    let mut manifest = Manifest::new("report", None);
    manifest.input("summary.csv".into(), &input.join("summary.csv"))?;
    manifest.artifacts(&out, &written)?;
    manifest.write(&out.join(MANIFEST_NAME))?;
    print!("{text}");
    Ok(())
}
