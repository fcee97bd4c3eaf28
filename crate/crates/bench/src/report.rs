//! Benchmark reports and their CSV, TSV and JSON-lines encodings.
//!
//! Floating-point fields are rounded to 6 significant digits when a row is built, so the
//! in-memory report is exactly what the files contain and every encoding round-trips.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use worm_core::synthetic::NoiseKind;

use crate::error::BenchError;

pub const HEADER: [&str; 9] = [
    "classifier",
    "noise_kind",
    "noise_level",
    "mean_snr_db",
    "mean_accuracy",
    "accuracy_stddev",
    "trials",
    "wall_time_ms",
    "error",
];

const IN_MEMORY: &str = "writing to memory cannot fail";

pub const PLOT_HEADER: [&str; 6] = [
    "series",
    "classifier",
    "noise_kind",
    "noise_level",
    "snr_db",
    "mean_accuracy",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Tsv,
    JsonLines,
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Tsv => "tsv",
            ReportFormat::JsonLines => "jsonl",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "tsv" => Ok(ReportFormat::Tsv),
            "jsonl" | "json-lines" => Ok(ReportFormat::JsonLines),
            other => Err(BenchError::Config(format!(
                "format must be csv, tsv or jsonl, got {other:?}"
            ))),
        }
    }
}

/// Aggregate result of one (classifier, noise level) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRow {
    pub classifier: String,
    pub noise_kind: NoiseKind,
    pub noise_level: f64,
    /// `+inf` for noiseless cells.
    #[serde(with = "extended_float")]
    pub mean_snr_db: f64,
    /// `None` on error rows.
    pub mean_accuracy: Option<f64>,
    pub accuracy_stddev: Option<f64>,
    pub trials: usize,
    pub wall_time_ms: Option<f64>,
    pub error: Option<String>,
}

impl ReportRow {
    /// Rounds every float to 6 significant digits.
    pub fn quantized(mut self) -> Self {
        self.noise_level = round_sig6(self.noise_level);
        self.mean_snr_db = round_sig6(self.mean_snr_db);
        self.mean_accuracy = self.mean_accuracy.map(round_sig6);
        self.accuracy_stddev = self.accuracy_stddev.map(round_sig6);
        self.wall_time_ms = self.wall_time_ms.map(round_sig6);
        self
    }

    fn fields(&self) -> [String; 9] {
        [
            self.classifier.clone(),
            self.noise_kind.as_str().to_string(),
            format_float(self.noise_level),
            format_float(self.mean_snr_db),
            format_opt(self.mean_accuracy),
            format_opt(self.accuracy_stddev),
            self.trials.to_string(),
            format_opt(self.wall_time_ms),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
}

/// One plotted line: a classifier under one noise kind, points sorted by level.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub classifier: String,
    pub noise_kind: NoiseKind,
    /// `(noise_level, snr_db, mean_accuracy)`.
    pub points: Vec<(f64, f64, Option<f64>)>,
}

impl PlotSeries {
    pub fn label(&self) -> String {
        format!("{} | {}", self.classifier, self.noise_kind)
    }
}

impl BenchmarkReport {
    /// Groups rows into series in order of first appearance.
    pub fn series(&self) -> Vec<PlotSeries> {
        let mut series: Vec<PlotSeries> = Vec::new();
        for row in &self.rows {
            let point = (row.noise_level, row.mean_snr_db, row.mean_accuracy);
            match series
                .iter_mut()
                .find(|s| s.classifier == row.classifier && s.noise_kind == row.noise_kind)
            {
                Some(s) => s.points.push(point),
                None => series.push(PlotSeries {
                    classifier: row.classifier.clone(),
                    noise_kind: row.noise_kind,
                    points: vec![point],
                }),
            }
        }
        for s in &mut series {
            s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        series
    }

    /// Rows of one classifier and noise kind, in report order.
    pub fn select(&self, classifier: &str, kind: NoiseKind) -> Vec<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.classifier == classifier && r.noise_kind == kind)
            .collect()
    }

    pub fn to_delimited(&self, delimiter: u8) -> String {
        let mut writer = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(HEADER).expect(IN_MEMORY);
        for row in &self.rows {
            writer.write_record(row.fields()).expect(IN_MEMORY);
        }
        String::from_utf8(writer.into_inner().expect(IN_MEMORY)).expect("report fields are UTF-8")
    }

    pub fn to_json_lines(&self) -> String {
        self.rows
            .iter()
            .map(|row| serde_json::to_string(row).expect("rows serialise") + "\n")
            .collect()
    }

    pub fn from_json_lines(text: &str) -> Result<Self, BenchError> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l).map_err(|e| BenchError::Config(format!("bad report line: {e}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(BenchmarkReport { rows })
    }

    pub fn encode(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_delimited(b','),
            ReportFormat::Tsv => self.to_delimited(b'\t'),
            ReportFormat::JsonLines => self.to_json_lines(),
        }
    }

    /// Long-format plot table: one line per point, series contiguous and sorted by level.
    pub fn plot_data(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(PLOT_HEADER).expect(IN_MEMORY);
        for series in self.series() {
            let label = series.label();
            for (level, snr, acc) in &series.points {
                writer
                    .write_record([
                        label.clone(),
                        series.classifier.clone(),
                        series.noise_kind.as_str().to_string(),
                        format_float(*level),
                        format_float(*snr),
                        format_opt(*acc),
                    ])
                    .expect(IN_MEMORY);
            }
        }
        String::from_utf8(writer.into_inner().expect(IN_MEMORY)).expect("plot fields are UTF-8")
    }
}

pub fn emit_report(report: &BenchmarkReport, format: ReportFormat, path: &Path) -> Result<(), BenchError> {
    write_file(path, &report.encode(format))
}

pub fn emit_plot_data(report: &BenchmarkReport, path: &Path) -> Result<(), BenchError> {
    write_file(path, &report.plot_data())
}

fn write_file(path: &Path, contents: &str) -> Result<(), BenchError> {
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(contents.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| BenchError::io(path, e))
}

/// Nearest double to `v` written with 6 significant digits.
pub fn round_sig6(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.5e}").parse().expect("formatted float parses")
}

/// Shortest decimal that reads back as `v`; for rounded values this has at most
/// 6 significant digits.
fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// JSON has no infinities; they are written as the strings `"inf"` and `"-inf"`.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&super::format_float(*v))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}
