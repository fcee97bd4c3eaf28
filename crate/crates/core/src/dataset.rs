//! Labelled sample collections and their CSV form.

use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Samples as columns of `data`, with one class label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    data: DataMatrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledDataset {
    /// Labels must lie in `0..num_classes`. Classes without samples are allowed here and
    /// rejected by the classifiers at fit time.
    pub fn new(data: DataMatrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.len() != data.cols() {
            return Err(Error::dim(format!(
                "{} labels for {} samples",
                labels.len(),
                data.cols()
            )));
        }
        if num_classes == 0 {
            return Err(Error::input("num_classes must be at least 1"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::input(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(LabeledDataset {
            data,
            labels,
            num_classes,
        })
    }

    /// Infers the class count as `max(label) + 1`.
    pub fn from_labels(data: DataMatrix, labels: Vec<usize>) -> Result<Self> {
        let num_classes = labels.iter().max().map_or(0, |&l| l + 1);
        Self::new(data, labels, num_classes)
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.data.rows()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> DVector<f64> {
        self.data.column(i)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Column indices of every sample labelled `class`, in dataset order.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect()
    }

    /// Fraction of `predicted` that matches the stored labels.
    pub fn accuracy(&self, predicted: &[usize]) -> Result<f64> {
        if predicted.len() != self.len() {
            return Err(Error::dim(format!(
                "{} predictions for {} samples",
                predicted.len(),
                self.len()
            )));
        }
        let hits = predicted
            .iter()
            .zip(&self.labels)
            .filter(|(p, l)| p == l)
            .count();
        Ok(hits as f64 / self.len() as f64)
    }

    /// Writes one sample per row with a header `x0,…,x{m-1},label`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io_err = |e: csv::Error| csv_error(path, e);
        let mut w = csv::Writer::from_path(path).map_err(io_err)?;
        let mut header: Vec<String> = (0..self.dim()).map(|i| format!("x{i}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(io_err)?;
        let mat = self.data.as_matrix();
        for (j, &label) in self.labels.iter().enumerate() {
            let mut record: Vec<String> = mat.column(j).iter().map(|v| v.to_string()).collect();
            record.push(label.to_string());
            w.write_record(&record).map_err(io_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// A table read from CSV; `labels` is present when the last header column is `label`.
#[derive(Debug, Clone)]
pub struct CsvSamples {
    pub data: DataMatrix,
    pub labels: Option<Vec<usize>>,
}

impl CsvSamples {
    pub fn into_labeled(self) -> Result<LabeledDataset> {
        let labels = self
            .labels
            .ok_or_else(|| Error::input("CSV has no label column"))?;
        LabeledDataset::from_labels(self.data, labels)
    }
}

/// Reads the format produced by [`LabeledDataset::write_csv`]. Files without a trailing
/// `label` header column are read as unlabelled samples.
pub fn read_csv(path: &Path) -> Result<CsvSamples> {
    let fmt = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let labeled = headers.iter().next_back() == Some("label");
    let dim = if labeled { headers.len() - 1 } else { headers.len() };
    if dim == 0 {
        return Err(fmt("no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != headers.len() {
            return Err(fmt(format!(
                "row {}: expected {} fields, got {}",
                row + 1,
                headers.len(),
                record.len()
            )));
        }
        for field in record.iter().take(dim) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| fmt(format!("row {}: bad number {field:?}", row + 1)))?;
            values.push(v);
        }
        if labeled {
            let field = &record[dim];
            let l: usize = field
                .trim()
                .parse()
                .map_err(|_| fmt(format!("row {}: bad label {field:?}", row + 1)))?;
            labels.push(l);
        }
    }
    let samples = values.len() / dim;
    let data = DataMatrix::from_column_slice(dim, samples, &values)
        .map_err(|e| fmt(e.to_string()))?;
    Ok(CsvSamples {
        data,
        labels: labeled.then_some(labels),
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}
