use std::path::PathBuf;

use apsvm::dataset::export_csv;
use apsvm::experiments::{simulate, SimulationConfig};
use apsvm::Result;
use clap::Args;

use crate::config::{parse_sigmas, pick, FileConfig};

/// Draw the three-class Gaussian simulation and write it as CSV.
#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Feature count.
    #[arg(long)]
    pub p: usize,
    /// Class standard deviations as `normal,neg,pos`.
    #[arg(long)]
    pub sigmas: Option<String>,
    /// Training samples per anomalous class.
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Test samples per anomalous class.
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Normal samples (all available to training).
    #[arg(long)]
    pub n_normals: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: SimulateArgs, file: &FileConfig, seed: u64) -> Result<()> {
    let sigmas_text = pick(args.sigmas, file.sigmas.clone(), "1,2,4".to_string());
    let (sigma_z, sigma_minus, sigma_plus) = parse_sigmas(&sigmas_text)?;
    let config = SimulationConfig {
        p: args.p,
        sigma_z,
        sigma_minus,
        sigma_plus,
        n_train_per_class: pick(args.n_train, file.n_train, 20),
        n_test_per_class: pick(args.n_test, file.n_test, 5),
        n_normals: pick(args.n_normals, file.n_normals, 20),
        seed,
    };
    let dataset = simulate(&config)?;
    export_csv(&dataset, &args.out)?;
    log::info!(
        "simulated {} samples x {} features -> {}",
        dataset.n_samples(),
        dataset.n_features(),
        args.out.display()
    );
    Ok(())
}
