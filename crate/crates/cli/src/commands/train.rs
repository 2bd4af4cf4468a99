use std::path::PathBuf;

use apsvm::dataset::{ingest_csv, CsvSchema};
use apsvm::experiments::{select_cost, select_cost_cv};
use apsvm::solver::{train, TrainOptions};
use apsvm::{Error, Result};
use clap::Args;

use crate::config::{parse_cost_grid, parse_gamma, parse_kernel, parse_mode, pick, FileConfig};

/// Train a classifier from a labeled CSV and write it as model.json.
#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Input dataset (feature columns + `class`, optional `split`).
    #[arg(long)]
    pub data: PathBuf,
    /// Kernel family: `rbf` or `linear`.
    #[arg(long)]
    pub kernel: Option<String>,
    /// RBF bandwidth: `auto`, `auto-squared`, or a positive real.
    #[arg(long)]
    pub gamma: Option<String>,
    /// `antiprofile` or `standard`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Fixed cost C. Mutually exclusive with --cost-grid.
    #[arg(long)]
    pub cost: Option<f64>,
    /// Cost grid (`default` or comma-separated); selects by test accuracy
    /// with fewest-SV tie-breaking, or by cross-validation with
    /// `--select cv`.
    #[arg(long)]
    pub cost_grid: Option<String>,
    /// Grid selector: `test` (protocol default) or `cv`.
    #[arg(long, default_value = "test")]
    pub select: String,
    /// Folds for `--select cv`.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Ridge added to the normal Gram matrix before pseudo-inversion.
    #[arg(long)]
    pub ridge: Option<f64>,
    /// KKT tolerance of the dual solver.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Pair-update budget of the dual solver.
    #[arg(long)]
    pub max_iter: Option<u64>,
    /// Output model path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: TrainArgs, file: &FileConfig, seed: u64) -> Result<()> {
    let dataset = ingest_csv(&args.data, &CsvSchema::default())?;
    let kernel = parse_kernel(&pick(args.kernel, file.kernel.clone(), "rbf".to_string()))?;
    let gamma = parse_gamma(&pick(args.gamma, file.gamma.clone(), "auto".to_string()))?;
    let mode = parse_mode(&pick(args.mode, file.mode.clone(), "antiprofile".to_string()))?;
    let opts = TrainOptions {
        tol: pick(args.tol, file.tol, TrainOptions::default().tol),
        max_iter: pick(args.max_iter, file.max_iter, TrainOptions::default().max_iter),
        ridge: pick(args.ridge, file.ridge, TrainOptions::default().ridge),
        ..TrainOptions::default()
    };
    let (spec, gamma_used) = super::resolve_kernel_spec(kernel, gamma, &dataset, seed)?;
    if let Some(g) = gamma_used {
        log::info!("gamma = {g}");
    }

    let cost = args.cost.or(file.cost);
    let grid_text = args.cost_grid.or_else(|| file.cost_grid.clone());
    let model = match (cost, grid_text) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter(
                "--cost and --cost-grid are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidParameter(
                "provide either --cost or --cost-grid".into(),
            ))
        }
        (Some(cost), None) => train(&dataset, spec, mode, cost, &opts)?,
        (None, Some(text)) => {
            let grid = parse_cost_grid(&text)?;
            let outcome = match args.select.as_str() {
                "test" => select_cost(&dataset, spec, mode, &grid, &opts)?,
                "cv" => {
                    let folds = pick(args.folds, file.folds, 5);
                    select_cost_cv(&dataset, spec, mode, &grid, folds, seed, &opts)?
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown selector `{other}` (expected `test` or `cv`)"
                    )))
                }
            };
            log::info!(
                "selected cost {} (accuracy {:.4}, {} support vectors)",
                outcome.best_cost,
                outcome.accuracy,
                outcome.model.support_indices().len()
            );
            outcome.model
        }
    };

    let out = std::fs::File::create(&args.out)?;
    model.write_json(std::io::BufWriter::new(out))?;
    log::info!("model written to {}", args.out.display());
    Ok(())
}
