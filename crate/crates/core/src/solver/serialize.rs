//! Lossless JSON persistence for trained models.
//!
//! Reals round-trip exactly (shortest-representation encoding), and a
//! SHA-256 checksum over the embedded training samples catches silent file
//! edits. Anti-profile models store the normal samples plus the pseudo-
//! inverse settings; the context is rebuilt deterministically on load.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::rkhs::build_context;
use crate::solver::{Mode, TrainedModel};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    /// Row-major entries.
    data: Vec<f64>,
}

impl MatrixFile {
    fn from_matrix(matrix: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(matrix.nrows() * matrix.ncols());
        for i in 0..matrix.nrows() {
            for j in 0..matrix.ncols() {
                data.push(matrix[(i, j)]);
            }
        }
        MatrixFile {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
            data,
        }
    }

    fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::ModelFile(format!(
                "matrix payload length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: u32,
    mode: Mode,
    kernel: KernelSpec,
    cost: f64,
    alpha: Vec<f64>,
    bias: f64,
    support_indices: Vec<usize>,
    labels: Vec<f64>,
    training_samples: MatrixFile,
    normals: Option<MatrixFile>,
    ridge: Option<f64>,
    eig_tolerance: Option<f64>,
    normal_coefficients: Option<Vec<f64>>,
    iterations: u64,
    kkt_residual: f64,
    training_sample_checksum: String,
}

fn absorb_matrix(hasher: &mut Sha256, m: &DMatrix<f64>) {
    hasher.update((m.nrows() as u64).to_le_bytes());
    hasher.update((m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            hasher.update(m[(i, j)].to_bits().to_le_bytes());
        }
    }
}

fn checksum(
    mode: Mode,
    samples: &DMatrix<f64>,
    labels: &[f64],
    normals: Option<&DMatrix<f64>>,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update([match mode {
        Mode::Standard => 0u8,
        Mode::AntiProfile => 1u8,
    }]);
    absorb_matrix(&mut hasher, samples);
    if let Some(normals) = normals {
        absorb_matrix(&mut hasher, normals);
    }
    for &y in labels {
        hasher.update(y.to_bits().to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            mode: self.mode,
            kernel: self.spec,
            cost: self.cost,
            alpha: self.alpha.iter().copied().collect(),
            bias: self.bias,
            support_indices: self.support_indices.clone(),
            labels: self.labels.clone(),
            training_samples: MatrixFile::from_matrix(&self.train_anomalous),
            normals: self
                .context
                .as_ref()
                .map(|ctx| MatrixFile::from_matrix(ctx.normals())),
            ridge: self.context.as_ref().map(|ctx| ctx.ridge()),
            eig_tolerance: self.context.as_ref().map(|ctx| ctx.eig_tolerance()),
            normal_coefficients: self
                .normal_coefficients
                .as_ref()
                .map(|c| c.iter().copied().collect()),
            iterations: self.iterations,
            kkt_residual: self.kkt_residual,
            training_sample_checksum: checksum(
                self.mode,
                &self.train_anomalous,
                &self.labels,
                self.context.as_ref().map(|ctx| ctx.normals()),
            ),
        };
        serde_json::to_string_pretty(&file)
            .map_err(|e| Error::ModelFile(format!("serialization failed: {e}")))
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(self.to_json()?.as_bytes())?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::ModelFile(format!("cannot parse model file: {e}")))?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::ModelFile(format!(
                "unsupported model schema version {}",
                file.schema_version
            )));
        }
        let train_anomalous = file.training_samples.to_matrix()?;
        let n = train_anomalous.nrows();
        if file.alpha.len() != n || file.labels.len() != n {
            return Err(Error::ModelFile(
                "alpha/label lengths do not match the training samples".into(),
            ));
        }
        if file.support_indices.iter().any(|&i| i >= n) {
            return Err(Error::ModelFile("support index out of range".into()));
        }

        let (context, normal_coefficients) = match file.mode {
            Mode::Standard => (None, None),
            Mode::AntiProfile => {
                let normals = file
                    .normals
                    .as_ref()
                    .ok_or_else(|| {
                        Error::ModelFile("anti-profile model is missing normal samples".into())
                    })?
                    .to_matrix()?;
                let ridge = file.ridge.ok_or_else(|| {
                    Error::ModelFile("anti-profile model is missing the ridge setting".into())
                })?;
                let eig_tolerance = file.eig_tolerance.ok_or_else(|| {
                    Error::ModelFile(
                        "anti-profile model is missing the eigenvalue tolerance".into(),
                    )
                })?;
                let coefficients = file.normal_coefficients.as_ref().ok_or_else(|| {
                    Error::ModelFile(
                        "anti-profile model is missing the normal coefficients".into(),
                    )
                })?;
                if coefficients.len() != normals.nrows() {
                    return Err(Error::ModelFile(
                        "normal coefficient length does not match the normal samples".into(),
                    ));
                }
                let ctx = build_context(&normals, file.kernel, ridge, eig_tolerance)?;
                (
                    Some(ctx),
                    Some(DVector::from_vec(coefficients.clone())),
                )
            }
        };

        let expected = checksum(
            file.mode,
            &train_anomalous,
            &file.labels,
            context.as_ref().map(|ctx| ctx.normals()),
        );
        if expected != file.training_sample_checksum {
            return Err(Error::ModelFile(
                "training-sample checksum mismatch; the model file was modified".into(),
            ));
        }

        Ok(TrainedModel {
            mode: file.mode,
            spec: file.kernel,
            cost: file.cost,
            alpha: DVector::from_vec(file.alpha),
            bias: file.bias,
            support_indices: file.support_indices,
            labels: file.labels,
            train_anomalous,
            context,
            normal_coefficients,
            iterations: file.iterations,
            kkt_residual: file.kkt_residual,
        })
    }

    pub fn read_json<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}
