use std::io::Write;
use std::path::PathBuf;

use apsvm::dataset::{format_double, ingest_csv, CsvSchema};
use apsvm::solver::TrainedModel;
use apsvm::Result;
use clap::Args;

/// Score a CSV against a saved model and write per-row decisions.
///
/// When the input carries split tags only the `test` rows are scored;
/// otherwise every row is. `--all` forces every row either way. `row_id`
/// refers to the 0-based data row in the input file.
#[derive(Args, Debug)]
pub struct PredictArgs {
    /// model.json written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Input CSV; the class/split columns are optional.
    #[arg(long)]
    pub data: PathBuf,
    /// Score every row regardless of split tags.
    #[arg(long)]
    pub all: bool,
    /// Output CSV path (columns: row_id, decision_value, label).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: PredictArgs) -> Result<()> {
    let model = TrainedModel::read_json(std::io::BufReader::new(std::fs::File::open(
        &args.model,
    )?))?;
    let dataset = ingest_csv(&args.data, &CsvSchema::features_only())?;
    let rows = if args.all {
        (0..dataset.n_samples()).collect()
    } else {
        dataset.prediction_indices()
    };

    let mut out = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    writeln!(out, "row_id,decision_value,label")?;
    for &row in &rows {
        let x: Vec<f64> = dataset.features().row(row).iter().copied().collect();
        let prediction = model.predict(&x)?;
        let label = if prediction.label > 0.0 { "pos" } else { "neg" };
        writeln!(
            out,
            "{row},{},{label}",
            format_double(prediction.decision)
        )?;
    }
    out.flush()?;
    log::info!("{} predictions written to {}", rows.len(), args.out.display());
    Ok(())
}
