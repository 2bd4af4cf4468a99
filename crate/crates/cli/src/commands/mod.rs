//! Subcommand implementations.

pub mod benchmark;
pub mod diagnose;
pub mod predict;
pub mod rank;
pub mod simulate;
pub mod train;

use std::io::Write;
use std::path::Path;

use apsvm::kernels::{rbf_gamma_heuristic, rbf_gamma_heuristic_with, DistanceAverage};
use apsvm::sampling::{derive_rng, stream};
use apsvm::{Dataset, Error, KernelSpec, Result};
use serde::Serialize;

use crate::config::{GammaChoice, KernelChoice};

/// Samples drawn per class by the bandwidth heuristic.
pub const GAMMA_SAMPLE_SIZE: usize = 5;

/// Materializes the kernel spec, drawing the RBF bandwidth from the data
/// when asked to. Returns the gamma actually used, if any.
pub fn resolve_kernel_spec(
    kernel: KernelChoice,
    gamma: GammaChoice,
    dataset: &Dataset,
    seed: u64,
) -> Result<(KernelSpec, Option<f64>)> {
    match kernel {
        KernelChoice::Linear => Ok((KernelSpec::Linear, None)),
        KernelChoice::Rbf => {
            let value = match gamma {
                GammaChoice::Fixed(value) => value,
                GammaChoice::Auto | GammaChoice::AutoSquared => {
                    let normals = dataset.normals();
                    if normals.nrows() == 0 {
                        return Err(Error::InvalidDataset(
                            "--gamma auto needs normal samples in the dataset".into(),
                        ));
                    }
                    let (anomalous, _) = dataset.anomalous_train();
                    let mut rng = derive_rng(seed, stream::GAMMA, 0, 0);
                    match gamma {
                        GammaChoice::Auto => rbf_gamma_heuristic(
                            &normals,
                            &anomalous,
                            GAMMA_SAMPLE_SIZE,
                            &mut rng,
                        )?,
                        _ => rbf_gamma_heuristic_with(
                            &normals,
                            &anomalous,
                            GAMMA_SAMPLE_SIZE,
                            &mut rng,
                            DistanceAverage::SquaredEuclidean,
                        )?,
                    }
                }
            };
            Ok((KernelSpec::Rbf { gamma: value }, Some(value)))
        }
    }
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidParameter(format!("serialization failed: {e}")))?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}
