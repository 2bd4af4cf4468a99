use std::io::Write;
use std::path::PathBuf;

use apsvm::dataset::{format_double, ingest_csv, CsvSchema};
use apsvm::experiments::variance_ratio_feature_ranking;
use apsvm::Result;
use clap::Args;

use crate::config::{pick, FileConfig};

/// Rank features by the log variance ratio between the two anomalous
/// classes and keep the top n.
#[derive(Args, Debug)]
pub struct RankArgs {
    /// Input dataset with both anomalous classes.
    #[arg(long)]
    pub data: PathBuf,
    /// How many features to keep.
    #[arg(long)]
    pub n: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: RankArgs, file: &FileConfig) -> Result<()> {
    let dataset = ingest_csv(&args.data, &CsvSchema::default())?;
    let n = pick(args.n, file.n_features, 10.min(dataset.n_features()));
    let ranking = variance_ratio_feature_ranking(&dataset, n)?;

    let mut out = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    writeln!(out, "rank,feature_index,feature_name,log_variance_ratio,flagged")?;
    for (rank, (&index, &ratio)) in ranking
        .indices
        .iter()
        .zip(ranking.log_ratios.iter())
        .enumerate()
    {
        let name = dataset
            .feature_names()
            .map(|names| names[index].clone())
            .unwrap_or_else(|| format!("f{index}"));
        let flagged = ranking.flagged.contains(&index);
        writeln!(
            out,
            "{},{},{},{},{}",
            rank,
            index,
            name,
            format_double(ratio),
            flagged
        )?;
    }
    out.flush()?;
    log::info!("{n} ranked features written to {}", args.out.display());
    Ok(())
}
