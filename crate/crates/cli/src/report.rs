//! Text tables and plot-ready figures from an experiment directory.
//!
//! Reads `summary.csv` and `confusion/*_percent.csv` and writes, under the
//! figure directory:
//!
//! - `accuracy.csv`, `precision.csv`, `recall.csv`, `f1.csv`: one row per
//!   model, one column per subject, in percent; each with a grouped bar
//!   chart `<metric>.svg`.
//! - `confusion_<subject>_<model>.svg`: heatmap of row-normalized
//!   percentages, actual label on the horizontal axis and predicted label on
//!   the vertical axis.
//! - `report.txt`: the same tables as printed to stdout.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub subject: String,
    pub model: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercentMatrix {
    pub stem: String,
    pub classes: Vec<String>,
    /// `[actual][predicted]`.
    pub values: Vec<Vec<f64>>,
}

const METRICS: [(&str, &str); 4] = [
    ("accuracy", "Accuracy"),
    ("precision", "Precision"),
    ("recall", "Recall"),
    ("f1", "F1-score"),
];

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| data_err(path, e))
}

fn parse_f64(line: u64, cell: &str) -> Result<f64, String> {
    cell.parse()
        .map_err(|_| format!("line {line}: '{cell}' is not a number"))
}

/// Parses the text of a `summary.csv`.
pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("missing column '{name}'"))
    };
    let idx = [
        col("subject")?,
        col("model")?,
        col("overall_accuracy")?,
        col("macro_precision")?,
        col("macro_recall")?,
        col("macro_f1")?,
    ];
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| {
            record
                .get(idx[i])
                .ok_or_else(|| format!("line {line}: too few fields"))
        };
        let num = |i: usize| parse_f64(line, cell(i)?);
        rows.push(SummaryRow {
            subject: cell(0)?.to_string(),
            model: cell(1)?.to_string(),
            accuracy: num(2)?,
            precision: num(3)?,
            recall: num(4)?,
            f1: num(5)?,
        });
    }
    Ok(rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, CliError> {
    parse_summary(&read(path)?).map_err(|e| data_err(path, e))
}

/// Parses the text of a `<stem>_percent.csv` confusion matrix.
pub fn parse_percent_matrix(text: &str, stem: &str) -> Result<PercentMatrix, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    let classes: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        values.push(
            record
                .iter()
                .skip(1)
                .map(|c| parse_f64(line, c))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    if values.len() != classes.len() || values.iter().any(|r| r.len() != classes.len()) {
        return Err("confusion matrix is not square".into());
    }
    Ok(PercentMatrix {
        stem: stem.to_string(),
        classes,
        values,
    })
}

pub fn read_percent_matrix(path: &Path) -> Result<PercentMatrix, CliError> {
    let stem = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.strip_suffix("_percent.csv"))
        .unwrap_or("matrix");
    parse_percent_matrix(&read(path)?, stem).map_err(|e| data_err(path, e))
}

fn metric(row: &SummaryRow, key: &str) -> f64 {
    match key {
        "accuracy" => row.accuracy,
        "precision" => row.precision,
        "recall" => row.recall,
        _ => row.f1,
    }
}

/// Subjects and models in first-seen order.
fn axes(rows: &[SummaryRow]) -> (Vec<String>, Vec<String>) {
    let mut subjects: Vec<String> = Vec::new();
    let mut models: Vec<String> = Vec::new();
    for r in rows {
        if !subjects.contains(&r.subject) {
            subjects.push(r.subject.clone());
        }
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    (subjects, models)
}

fn lookup(rows: &[SummaryRow], subject: &str, model: &str, key: &str) -> Option<f64> {
    rows.iter()
        .find(|r| r.subject == subject && r.model == model)
        .map(|r| 100.0 * metric(r, key))
}

pub fn metric_csv(rows: &[SummaryRow], key: &str) -> String {
    let (subjects, models) = axes(rows);
    let mut out = format!("model,{}\n", subjects.join(","));
    for m in &models {
        out.push_str(m);
        for s in &subjects {
            out.push(',');
            if let Some(v) = lookup(rows, s, m, key) {
                write!(out, "{v:.2}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn bar_chart_svg(rows: &[SummaryRow], key: &str, title: &str) -> String {
    let (subjects, models) = axes(rows);
    let bar = 14.0;
    let gap = 18.0;
    let group = bar * subjects.len().max(1) as f64 + gap;
    let (left, top, plot_h) = (60.0, 40.0, 240.0);
    let width = left + group * models.len() as f64 + 20.0 + 90.0;
    let height = top + plot_h + 60.0;
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" font-family=\"sans-serif\" font-size=\"11\">"
    )
    .unwrap();
    writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
    writeln!(
        s,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{} (%)</text>",
        width / 2.0,
        escape(title)
    )
    .unwrap();
    for tick in (0..=100).step_by(20) {
        let y = top + plot_h * (1.0 - tick as f64 / 100.0);
        writeln!(
            s,
            "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{tick}</text>",
            left + group * models.len() as f64,
            left - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    for (mi, m) in models.iter().enumerate() {
        let x0 = left + gap / 2.0 + group * mi as f64;
        for (si, subj) in subjects.iter().enumerate() {
            if let Some(v) = lookup(rows, subj, m, key) {
                let h = plot_h * v.clamp(0.0, 100.0) / 100.0;
                writeln!(
                    s,
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{bar:.1}\" height=\"{h:.1}\" fill=\"{}\"><title>{} {}: {v:.2}</title></rect>",
                    x0 + bar * si as f64,
                    top + plot_h - h,
                    PALETTE[si % PALETTE.len()],
                    escape(subj),
                    escape(m)
                )
                .unwrap();
            }
        }
        writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            x0 + bar * subjects.len() as f64 / 2.0,
            top + plot_h + 16.0,
            escape(&m.to_uppercase())
        )
        .unwrap();
    }
    let lx = left + group * models.len() as f64 + 20.0;
    for (si, subj) in subjects.iter().enumerate() {
        let y = top + 16.0 * si as f64;
        writeln!(
            s,
            "<rect x=\"{lx:.1}\" y=\"{y:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            PALETTE[si % PALETTE.len()],
            lx + 14.0,
            y + 9.0,
            escape(subj)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn heatmap_svg(m: &PercentMatrix) -> String {
    let n = m.classes.len();
    let cell = 48.0;
    let (left, top) = (90.0, 50.0);
    let width = left + cell * n as f64 + 20.0;
    let height = top + cell * n as f64 + 50.0;
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" font-family=\"sans-serif\" font-size=\"11\">"
    )
    .unwrap();
    writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
    writeln!(
        s,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        width / 2.0,
        escape(&m.stem)
    )
    .unwrap();
    // column = actual, row = predicted
    for (col, actual) in m.values.iter().enumerate() {
        for (row, &v) in actual.iter().enumerate() {
            let shade = 255.0 - 2.0 * v.clamp(0.0, 100.0);
            let ink = if v > 55.0 { "white" } else { "black" };
            let (x, y) = (left + cell * col as f64, top + cell * row as f64);
            writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({:.0},{:.0},255)\" stroke=\"white\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"{ink}\">{v:.0}</text>",
                shade,
                shade,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            )
            .unwrap();
        }
    }
    for (i, c) in m.classes.iter().enumerate() {
        writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            left + cell * (i as f64 + 0.5),
            top + cell * n as f64 + 16.0,
            escape(c),
            left - 6.0,
            top + cell * (i as f64 + 0.5) + 4.0,
            escape(c)
        )
        .unwrap();
    }
    writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">Actual label</text>",
        left + cell * n as f64 / 2.0,
        top + cell * n as f64 + 36.0
    )
    .unwrap();
    writeln!(
        s,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">Predicted label</text>",
        top + cell * n as f64 / 2.0,
        top + cell * n as f64 / 2.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

pub fn text_report(rows: &[SummaryRow], matrices: &[PercentMatrix]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<10} {:<6} {:>9} {:>10} {:>8} {:>8}",
        "subject", "model", "accuracy", "precision", "recall", "f1"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<10} {:<6} {:>8.2}% {:>9.2}% {:>7.2}% {:>7.2}%",
            r.subject,
            r.model,
            100.0 * r.accuracy,
            100.0 * r.precision,
            100.0 * r.recall,
            100.0 * r.f1
        )
        .unwrap();
    }
    for m in matrices {
        writeln!(out, "\n{} (row = actual, column = predicted, %)", m.stem).unwrap();
        write!(out, "{:>8}", "").unwrap();
        for c in &m.classes {
            write!(out, " {c:>7}").unwrap();
        }
        out.push('\n');
        for (c, row) in m.classes.iter().zip(&m.values) {
            write!(out, "{c:>8}").unwrap();
            for v in row {
                write!(out, " {v:>7.2}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Writes every figure and `report.txt` into `out_dir`; returns the report
/// text and the written paths.
pub fn write_report(input: &Path, out_dir: &Path) -> Result<(String, Vec<PathBuf>), CliError> {
    let rows = read_summary(&input.join("summary.csv"))?;
    let confusion = input.join("confusion");
    let mut percent_files = BTreeSet::new();
    if confusion.is_dir() {
        for entry in fs::read_dir(&confusion).map_err(|e| data_err(&confusion, e))? {
            let path = entry.map_err(|e| data_err(&confusion, e))?.path();
            if path.to_string_lossy().ends_with("_percent.csv") {
                percent_files.insert(path);
            }
        }
    }
    let matrices = percent_files
        .iter()
        .map(|p| read_percent_matrix(p))
        .collect::<Result<Vec<_>, _>>()?;

    fs::create_dir_all(out_dir).map_err(|e| data_err(out_dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<(), CliError> {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|e| data_err(&path, e))?;
        written.push(path);
        Ok(())
    };
    for (key, title) in METRICS {
        emit(format!("{key}.csv"), metric_csv(&rows, key))?;
        emit(format!("{key}.svg"), bar_chart_svg(&rows, key, title))?;
    }
    for m in &matrices {
        emit(format!("confusion_{}.svg", m.stem), heatmap_svg(m))?;
    }
    let text = text_report(&rows, &matrices);
    emit("report.txt".into(), text.clone())?;
    Ok((text, written))
}
