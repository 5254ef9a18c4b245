//! Labeled numeric data: CSV ingestion, validation, and deterministic
//! stratified splitting.

use std::fmt;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::dissim::hex;
use crate::error::{Error, Result};

/// One of the two class tags. Display and serialization use 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassId {
    One,
    Two,
}

impl ClassId {
    pub fn index(self) -> usize {
        match self {
            ClassId::One => 0,
            ClassId::Two => 1,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            ClassId::One => 1,
            ClassId::Two => 2,
        }
    }

    pub fn other(self) -> ClassId {
        match self {
            ClassId::One => ClassId::Two,
            ClassId::Two => ClassId::One,
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// How to locate the label column in a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    /// Match by header name.
    Name(String),
    /// 0-based column index.
    Index(usize),
}

/// An immutable labeled matrix: n observations by `dim` features, every
/// value finite, labels covering both classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<ClassId>,
    feature_names: Vec<String>,
    /// Original label strings for class 1 and class 2, in order of first
    /// appearance in the source.
    label_names: [String; 2],
    label_column_name: String,
}

impl Dataset {
    /// Build a dataset with default metadata (feature names `f1..fD`,
    /// label names `"1"`/`"2"`). Validates shape, finiteness, and that both
    /// classes are present.
    pub fn new(features: Array2<f64>, labels: Vec<ClassId>) -> Result<Self> {
        let dim = features.ncols();
        let names = (1..=dim).map(|i| format!("f{i}")).collect();
        Dataset::with_metadata(
            features,
            labels,
            names,
            ["1".to_string(), "2".to_string()],
            "label".to_string(),
        )
    }

    pub(crate) fn with_metadata(
        features: Array2<f64>,
        labels: Vec<ClassId>,
        feature_names: Vec<String>,
        label_names: [String; 2],
        label_column_name: String,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::InvalidParameter(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.ncols()
            )));
        }
        for ((r, c), &x) in features.indexed_iter() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    row: r + 1,
                    column: feature_names[c].clone(),
                });
            }
        }
        let n1 = labels.iter().filter(|&&l| l == ClassId::One).count();
        if n1 == 0 || n1 == labels.len() {
            return Err(Error::TooFewLabels {
                found: usize::from(!labels.is_empty()),
            });
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            label_names,
            label_column_name,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String; 2] {
        &self.label_names
    }

    pub fn label_column_name(&self) -> &str {
        &self.label_column_name
    }

    /// (n1, n2) counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let n1 = self.labels.iter().filter(|&&l| l == ClassId::One).count();
        (n1, self.labels.len() - n1)
    }

    /// Row indices of one class, in original order.
    pub fn class_indices(&self, class: ClassId) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect()
    }

    /// Copy of one class's rows, in original order.
    pub fn class_matrix(&self, class: ClassId) -> Array2<f64> {
        let idx = self.class_indices(class);
        let mut m = Array2::zeros((idx.len(), self.dim()));
        for (r, &i) in idx.iter().enumerate() {
            m.row_mut(r).assign(&self.features.row(i));
        }
        m
    }

    /// Content hash binding a trained model to its training data.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"dataset-v1");
        hasher.update((self.n() as u64).to_le_bytes());
        hasher.update((self.dim() as u64).to_le_bytes());
        for &l in &self.labels {
            hasher.update([l.as_u8()]);
        }
        for &x in self.features.iter() {
            hasher.update(x.to_le_bytes());
        }
        hex(&hasher.finalize())
    }

    /// Z-score every feature column (sample standard deviation, n-1
    /// denominator). Constant columns become all zeros.
    pub fn standardized(&self) -> Dataset {
        let n = self.n() as f64;
        let mut features = self.features.clone();
        for mut col in features.columns_mut() {
            let mean = col.sum() / n;
            let var = col.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            col.mapv_inplace(|x| (x - mean) / sd);
        }
        Dataset {
            features,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
            label_column_name: self.label_column_name.clone(),
        }
    }

    fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = Array2::zeros((rows.len(), self.dim()));
        let mut labels = Vec::with_capacity(rows.len());
        for (r, &i) in rows.iter().enumerate() {
            features.row_mut(r).assign(&self.features.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
            label_column_name: self.label_column_name.clone(),
        }
    }
}

fn resolve_label_column(headers: &[String], column: Option<&LabelColumn>) -> Result<usize> {
    match column {
        None => Ok(headers.len() - 1),
        Some(LabelColumn::Index(i)) => {
            if *i < headers.len() {
                Ok(*i)
            } else {
                Err(Error::LabelColumnNotFound(format!("#{i}")))
            }
        }
        Some(LabelColumn::Name(name)) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::LabelColumnNotFound(name.clone())),
    }
}

/// Load a labeled CSV file: header row, comma delimiter, `.` decimal
/// separator. Labels are remapped onto classes 1 and 2 in order of first
/// appearance; the original strings are kept in the dataset metadata.
///
/// Row numbers in errors are 1-based data rows (the header is row 0).
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&LabelColumn>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => Error::Csv(e),
        })?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::InvalidParameter("empty CSV header".into()));
    }
    let label_idx = resolve_label_column(&headers, label_column)?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let dim = feature_names.len();
    if dim == 0 {
        return Err(Error::InvalidParameter("CSV has no feature columns".into()));
    }

    let mut values: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (row_i, record) in reader.records().enumerate() {
        let row = row_i + 1;
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::InvalidParameter(format!(
                "row {row} has {} fields, expected {}",
                record.len(),
                headers.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            if col == label_idx {
                if field.is_empty() {
                    return Err(Error::MissingValue {
                        row,
                        column: headers[col].clone(),
                    });
                }
                raw_labels.push(field.to_string());
                continue;
            }
            if field.is_empty() {
                return Err(Error::MissingValue {
                    row,
                    column: headers[col].clone(),
                });
            }
            let x: f64 = field.parse().map_err(|_| Error::NonNumeric {
                row,
                column: headers[col].clone(),
                value: field.to_string(),
            })?;
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: headers[col].clone(),
                });
            }
            values.push(x);
        }
    }

    // Remap labels onto {1, 2} by order of first appearance.
    let mut distinct: Vec<String> = Vec::new();
    for l in &raw_labels {
        if !distinct.contains(l) {
            distinct.push(l.clone());
        }
    }
    if distinct.len() < 2 {
        return Err(Error::TooFewLabels {
            found: distinct.len(),
        });
    }
    if distinct.len() > 2 {
        return Err(Error::MultiClass {
            found: distinct.len(),
        });
    }
    let labels: Vec<ClassId> = raw_labels
        .iter()
        .map(|l| {
            if *l == distinct[0] {
                ClassId::One
            } else {
                ClassId::Two
            }
        })
        .collect();

    let features = Array2::from_shape_vec((labels.len(), dim), values)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Dataset::with_metadata(
        features,
        labels,
        feature_names,
        [distinct[0].clone(), distinct[1].clone()],
        headers[label_idx].clone(),
    )
}

/// Write a dataset as CSV: feature columns first, label column last, label
/// values as the original strings. Floats use the shortest representation
/// that parses back to the same bits.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let mut header: Vec<String> = data.feature_names.to_vec();
    header.push(data.label_column_name.clone());
    writer.write_record(&header)?;
    for (i, row) in data.features.rows().into_iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        record.push(data.label_names[data.labels[i].index()].clone());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Load a CSV file of bare feature rows for scoring. When the file has
/// exactly `expect_dim + 1` columns, one column is assumed to hold labels
/// (`label_column`, defaulting to the last) and is returned separately as
/// raw strings; with exactly `expect_dim` columns every column is a
/// feature.
pub fn load_features_csv(
    path: impl AsRef<Path>,
    expect_dim: usize,
    label_column: Option<&LabelColumn>,
) -> Result<(Array2<f64>, Option<Vec<String>>)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        })?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = if headers.len() == expect_dim + 1 {
        Some(resolve_label_column(&headers, label_column)?)
    } else {
        None
    };
    let dim = headers.len() - usize::from(label_idx.is_some());
    if dim != expect_dim {
        return Err(Error::DimensionMismatch {
            expected: expect_dim,
            got: dim,
        });
    }
    let mut values = Vec::new();
    let mut dropped: Vec<String> = Vec::new();
    let mut rows = 0usize;
    for (row_i, record) in reader.records().enumerate() {
        let row = row_i + 1;
        let record = record?;
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            if Some(col) == label_idx {
                dropped.push(field.to_string());
                continue;
            }
            let x: f64 = field.parse().map_err(|_| Error::NonNumeric {
                row,
                column: headers.get(col).cloned().unwrap_or_default(),
                value: field.to_string(),
            })?;
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: headers.get(col).cloned().unwrap_or_default(),
                });
            }
            values.push(x);
        }
        rows += 1;
    }
    let features = Array2::from_shape_vec((rows, dim), values)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((features, label_idx.map(|_| dropped)))
}

/// Stratified train/test split: per class, ceil(fraction * n_j) rows go to
/// train. Deterministic for a fixed seed (one ChaCha8 substream per class);
/// row order within each part follows the original dataset.
pub fn split_train_test(
    data: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut train_rows: Vec<usize> = Vec::new();
    let mut test_rows: Vec<usize> = Vec::new();
    for class in [ClassId::One, ClassId::Two] {
        let mut idx = data.class_indices(class);
        if idx.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: class.as_u8(),
                size: idx.len(),
                min: 2,
            });
        }
        let take = (train_fraction * idx.len() as f64).ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(class.as_u8() as u64);
        idx.shuffle(&mut rng);
        train_rows.extend_from_slice(&idx[..take]);
        test_rows.extend_from_slice(&idx[take..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok((data.subset(&train_rows), data.subset(&test_rows)))
}
