//! Sample container with three-way role labels, train/test split tags, and
//! CSV ingestion/export.
//!
//! CSV layout: one feature column per dimension, a `class` column with
//! values `normal`/`neg`/`pos` (case-insensitive, remappable), and an
//! optional `split` column with `train`/`test`. Reals are written in the
//! shortest representation that parses back to the identical double, so a
//! CSV round trip is bitwise lossless.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which class a sample belongs to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Stable normal class; never carries a classification label.
    Normal,
    /// Anomalous class labeled -1.
    Neg,
    /// Anomalous class labeled +1.
    Pos,
}

impl Role {
    pub fn label(&self) -> Option<f64> {
        match self {
            Role::Normal => None,
            Role::Neg => Some(-1.0),
            Role::Pos => Some(1.0),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Normal => "normal",
            Role::Neg => "neg",
            Role::Pos => "pos",
        }
    }
}

/// Train/test membership of a sample.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Unsplit,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Unsplit => "unsplit",
        }
    }
}

/// Feature matrix (rows are samples) plus per-sample role and split tags.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    roles: Vec<Role>,
    split: Vec<Split>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        features: DMatrix<f64>,
        roles: Vec<Role>,
        split: Vec<Split>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = features.nrows();
        if n == 0 || features.ncols() == 0 {
            return Err(Error::EmptyInput("dataset".into()));
        }
        if roles.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: roles.len(),
            });
        }
        if split.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: split.len(),
            });
        }
        if let Some(names) = &feature_names {
            if names.len() != features.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: features.ncols(),
                    got: names.len(),
                });
            }
        }
        if let Some((i, j)) = (0..n)
            .flat_map(|i| (0..features.ncols()).map(move |j| (i, j)))
            .find(|&(i, j)| !features[(i, j)].is_finite())
        {
            return Err(Error::NonFinite(format!(
                "feature matrix entry at row {i}, column {j}"
            )));
        }
        Ok(Dataset {
            features,
            roles,
            split,
            feature_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn split(&self) -> &[Split] {
        &self.split
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn role_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for role in &self.roles {
            match role {
                Role::Normal => counts.0 += 1,
                Role::Neg => counts.1 += 1,
                Role::Pos => counts.2 += 1,
            }
        }
        counts
    }

    fn has_split_tags(&self) -> bool {
        self.split.iter().any(|s| *s != Split::Unsplit)
    }

    fn select(&self, indices: &[usize]) -> DMatrix<f64> {
        self.features.select_rows(indices.iter())
    }

    /// Row indices of all normal samples; all of them are available to
    /// training regardless of split tags.
    pub fn normal_indices(&self) -> Vec<usize> {
        (0..self.n_samples())
            .filter(|&i| self.roles[i] == Role::Normal)
            .collect()
    }

    pub fn normals(&self) -> DMatrix<f64> {
        self.select(&self.normal_indices())
    }

    /// Anomalous rows used for training: every non-test anomalous row, so
    /// datasets without split tags train on all anomalous samples.
    pub fn anomalous_train_indices(&self) -> Vec<usize> {
        (0..self.n_samples())
            .filter(|&i| self.roles[i] != Role::Normal && self.split[i] != Split::Test)
            .collect()
    }

    pub fn anomalous_test_indices(&self) -> Vec<usize> {
        (0..self.n_samples())
            .filter(|&i| self.roles[i] != Role::Normal && self.split[i] == Split::Test)
            .collect()
    }

    pub fn anomalous_train(&self) -> (DMatrix<f64>, Vec<f64>) {
        let indices = self.anomalous_train_indices();
        let labels = indices
            .iter()
            .map(|&i| self.roles[i].label().expect("anomalous role"))
            .collect();
        (self.select(&indices), labels)
    }

    pub fn anomalous_test(&self) -> (DMatrix<f64>, Vec<f64>) {
        let indices = self.anomalous_test_indices();
        let labels = indices
            .iter()
            .map(|&i| self.roles[i].label().expect("anomalous role"))
            .collect();
        (self.select(&indices), labels)
    }

    /// Rows a `predict` run should score: the test rows when the dataset
    /// carries split tags, every row otherwise.
    pub fn prediction_indices(&self) -> Vec<usize> {
        if self.has_split_tags() {
            (0..self.n_samples())
                .filter(|&i| self.split[i] == Split::Test)
                .collect()
        } else {
            (0..self.n_samples()).collect()
        }
    }
}

/// How CSV columns map onto the dataset.
#[derive(Clone, Debug)]
pub struct CsvSchema {
    /// Name of the class column.
    pub class_column: String,
    /// Name of the optional split column.
    pub split_column: String,
    /// Mapping from (lowercased) class values to roles; defaults to
    /// normal/neg/pos.
    pub role_names: BTreeMap<String, Role>,
    /// Whether a missing class column is an error. Prediction inputs may
    /// legitimately carry features only.
    pub require_class: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        let mut role_names = BTreeMap::new();
        role_names.insert("normal".to_string(), Role::Normal);
        role_names.insert("neg".to_string(), Role::Neg);
        role_names.insert("pos".to_string(), Role::Pos);
        CsvSchema {
            class_column: "class".to_string(),
            split_column: "split".to_string(),
            role_names,
            require_class: true,
        }
    }
}

impl CsvSchema {
    /// Schema for prediction inputs: class/split columns are optional.
    pub fn features_only() -> Self {
        CsvSchema {
            require_class: false,
            ..CsvSchema::default()
        }
    }
}

fn csv_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Csv {
        location: location.into(),
        message: message.into(),
    }
}

/// Reads a dataset from CSV. Rows with non-numeric or non-finite feature
/// cells are rejected with the offending row and column named.
pub fn ingest_csv_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers: Vec<String> = csv_reader
        .headers()
        .map_err(|e| csv_error("header", e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let class_idx = headers.iter().position(|h| h == &schema.class_column);
    let split_idx = headers.iter().position(|h| h == &schema.split_column);
    if schema.require_class && class_idx.is_none() {
        return Err(csv_error(
            "header",
            format!("missing required class column `{}`", schema.class_column),
        ));
    }

    let feature_columns: Vec<usize> = (0..headers.len())
        .filter(|i| Some(*i) != class_idx && Some(*i) != split_idx)
        .collect();
    if feature_columns.is_empty() {
        return Err(csv_error("header", "no feature columns"));
    }
    let feature_names: Vec<String> = feature_columns
        .iter()
        .map(|&i| headers[i].clone())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut roles: Vec<Role> = Vec::new();
    let mut split: Vec<Split> = Vec::new();
    for (row_number, record) in csv_reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(format!("row {row_number}"), e.to_string()))?;
        if record.len() != headers.len() {
            return Err(csv_error(
                format!("row {row_number}"),
                format!("expected {} columns, found {}", headers.len(), record.len()),
            ));
        }
        let mut row = Vec::with_capacity(feature_columns.len());
        for &col in &feature_columns {
            let cell = record.get(col).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| {
                csv_error(
                    format!("row {row_number}, column `{}`", headers[col]),
                    format!("cannot parse `{cell}` as a real number"),
                )
            })?;
            if !value.is_finite() {
                return Err(csv_error(
                    format!("row {row_number}, column `{}`", headers[col]),
                    format!("non-finite feature value `{cell}`"),
                ));
            }
            row.push(value);
        }
        rows.push(row);

        let role = match class_idx {
            Some(idx) => {
                let cell = record.get(idx).unwrap_or("").trim().to_lowercase();
                *schema.role_names.get(&cell).ok_or_else(|| {
                    csv_error(
                        format!("row {row_number}, column `{}`", schema.class_column),
                        format!("unknown class value `{cell}`"),
                    )
                })?
            }
            None => Role::Pos,
        };
        roles.push(role);

        let tag = match split_idx {
            Some(idx) => {
                let cell = record.get(idx).unwrap_or("").trim().to_lowercase();
                match cell.as_str() {
                    "train" => Split::Train,
                    "test" => Split::Test,
                    "" | "unsplit" => Split::Unsplit,
                    other => {
                        return Err(csv_error(
                            format!("row {row_number}, column `{}`", schema.split_column),
                            format!("unknown split value `{other}`"),
                        ))
                    }
                }
            }
            None => Split::Unsplit,
        };
        split.push(tag);
    }

    if rows.is_empty() {
        return Err(csv_error("body", "dataset has no rows"));
    }
    let p = rows[0].len();
    let features = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    Dataset::new(features, roles, split, Some(feature_names))
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(&path)?;
    ingest_csv_reader(std::io::BufReader::new(file), schema)
}

/// Writes the dataset as CSV. Doubles are formatted with the shortest
/// round-trip representation; a split column is emitted only when some row
/// carries a split tag.
pub fn export_csv_writer<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    let p = dataset.n_features();
    let default_names: Vec<String>;
    let names: &[String] = match dataset.feature_names() {
        Some(names) => names,
        None => {
            default_names = (0..p).map(|j| format!("f{j}")).collect();
            &default_names
        }
    };

    let with_split = dataset.has_split_tags();
    let mut header: Vec<String> = names.to_vec();
    header.push("class".to_string());
    if with_split {
        header.push("split".to_string());
    }
    csv_writer
        .write_record(&header)
        .map_err(|e| csv_error("header", e.to_string()))?;

    for i in 0..dataset.n_samples() {
        let mut record: Vec<String> = (0..p)
            .map(|j| format_double(dataset.features()[(i, j)]))
            .collect();
        record.push(dataset.roles()[i].as_str().to_string());
        if with_split {
            record.push(dataset.split()[i].as_str().to_string());
        }
        csv_writer
            .write_record(&record)
            .map_err(|e| csv_error(format!("row {i}"), e.to_string()))?;
    }
    csv_writer
        .flush()
        .map_err(|e| csv_error("flush", e.to_string()))?;
    Ok(())
}

pub fn export_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(&path)?;
    export_csv_writer(dataset, std::io::BufWriter::new(file))
}

/// Shortest decimal form that parses back to the identical double.
pub fn format_double(value: f64) -> String {
    format!("{value}")
}
