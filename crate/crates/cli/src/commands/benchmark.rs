use std::io::Write;
use std::path::{Path, PathBuf};

use apsvm::dataset::format_double;
use apsvm::experiments::{benchmark, BenchmarkConfig, ExperimentReport, KernelPolicy};
use apsvm::solver::{Mode, TrainOptions};
use apsvm::{Error, Result};
use clap::Args;
use serde::Serialize;

use crate::config::{parse_comma_usize, parse_cost_grid, parse_sigmas, pick, FileConfig};
use crate::svg::{write_line_chart, Series};

pub const BENCHMARK_SCHEMA_VERSION: u32 = 1;

/// Repeated simulation sweep comparing standard and anti-profile modes
/// over feature counts.
#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Feature counts to sweep, comma-separated.
    #[arg(long)]
    pub p_list: Option<String>,
    /// Repeats per feature count.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Class standard deviations as `normal,neg,pos`.
    #[arg(long)]
    pub sigmas: Option<String>,
    /// Training samples per anomalous class.
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Test samples per anomalous class.
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Normal samples per repeat.
    #[arg(long)]
    pub n_normals: Option<usize>,
    /// Cost grid (`default` or comma-separated).
    #[arg(long)]
    pub cost_grid: Option<String>,
    /// Kernel policy: `rbf-auto` (squared-distance bandwidth),
    /// `rbf-auto-distance`, `rbf:<gamma>`, or `linear`.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Modes to run: `both`, `standard`, or `antiprofile`.
    #[arg(long, default_value = "both")]
    pub modes: String,
    /// Output report path.
    #[arg(long)]
    pub out: PathBuf,
    /// If set, tidy CSV series and SVG charts are written here.
    #[arg(long)]
    pub plots_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct BenchmarkArtifact {
    schema_version: u32,
    effective_config: BenchmarkConfig,
    records: Vec<apsvm::experiments::RecordRow>,
    aggregates: Vec<apsvm::experiments::Aggregate>,
    provenance: apsvm::experiments::Provenance,
}

fn parse_kernel_policy(text: &str) -> Result<KernelPolicy> {
    match text.to_lowercase().as_str() {
        "linear" => Ok(KernelPolicy::Linear),
        "rbf-auto" | "rbf" => Ok(KernelPolicy::RbfMeanSquaredDistance),
        "rbf-auto-distance" => Ok(KernelPolicy::RbfMeanDistance),
        other => match other.strip_prefix("rbf:").map(str::parse::<f64>) {
            Some(Ok(gamma)) if gamma.is_finite() && gamma > 0.0 => {
                Ok(KernelPolicy::RbfFixed { gamma })
            }
            _ => Err(Error::InvalidParameter(format!(
                "unknown kernel policy `{text}` (expected `rbf-auto`, `rbf-auto-distance`, `rbf:<gamma>`, or `linear`)"
            ))),
        },
    }
}

pub fn run(args: BenchmarkArgs, file: &FileConfig, seed: u64) -> Result<()> {
    let p_text = pick(args.p_list, file.p_list.clone(), "10,50,100,500,1000".to_string());
    let sigmas_text = pick(args.sigmas, file.sigmas.clone(), "1,2,4".to_string());
    let (sigma_z, sigma_minus, sigma_plus) = parse_sigmas(&sigmas_text)?;
    let grid_text = pick(args.cost_grid, file.cost_grid.clone(), "default".to_string());
    let policy_text = pick(args.kernel, file.gamma_policy.clone(), "rbf-auto".to_string());
    let modes = match args.modes.as_str() {
        "both" => vec![Mode::Standard, Mode::AntiProfile],
        "standard" => vec![Mode::Standard],
        "antiprofile" => vec![Mode::AntiProfile],
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown mode selection `{other}`"
            )))
        }
    };

    let config = BenchmarkConfig {
        sigma_z,
        sigma_minus,
        sigma_plus,
        n_train_per_class: pick(args.n_train, file.n_train, 20),
        n_test_per_class: pick(args.n_test, file.n_test, 5),
        n_normals: pick(args.n_normals, file.n_normals, 20),
        p_values: parse_comma_usize(&p_text, "p list")?,
        n_repeats: pick(args.repeats, file.repeats, 10),
        modes,
        cost_grid: parse_cost_grid(&grid_text)?,
        kernel_policy: parse_kernel_policy(&policy_text)?,
        gamma_sample_size: super::GAMMA_SAMPLE_SIZE,
        base_seed: seed,
    };

    let report = benchmark(&config, &TrainOptions::default())?;
    for aggregate in &report.aggregates {
        log::info!(
            "p={} {}: accuracy {:.4}, SV fraction {:.4}",
            aggregate.p,
            aggregate.mode,
            aggregate.mean_accuracy,
            aggregate.mean_sv_fraction
        );
    }

    let artifact = BenchmarkArtifact {
        schema_version: BENCHMARK_SCHEMA_VERSION,
        effective_config: config,
        records: report.records.clone(),
        aggregates: report.aggregates.clone(),
        provenance: report.provenance.clone(),
    };
    super::write_json_file(&args.out, &artifact)?;

    if let Some(dir) = &args.plots_dir {
        std::fs::create_dir_all(dir)?;
        write_plots(dir, &report)?;
    }
    Ok(())
}

fn write_plots(dir: &Path, report: &ExperimentReport) -> Result<()> {
    let mut records = std::io::BufWriter::new(std::fs::File::create(dir.join("records.csv"))?);
    report.write_records_csv(&mut records)?;
    records.flush()?;

    for (metric, file_name, title) in [
        (
            Metric::Accuracy,
            "accuracy_vs_p.csv",
            "Mean test accuracy vs feature count",
        ),
        (
            Metric::SvFraction,
            "sv_fraction_vs_p.csv",
            "Mean support-vector fraction vs feature count",
        ),
    ] {
        let mut csv = std::io::BufWriter::new(std::fs::File::create(dir.join(file_name))?);
        writeln!(csv, "p,mode,value")?;
        for aggregate in &report.aggregates {
            writeln!(
                csv,
                "{},{},{}",
                aggregate.p,
                aggregate.mode,
                format_double(metric.of(aggregate))
            )?;
        }
        csv.flush()?;

        let modes: Vec<Mode> = {
            let mut seen = Vec::new();
            for a in &report.aggregates {
                if !seen.contains(&a.mode) {
                    seen.push(a.mode);
                }
            }
            seen
        };
        let series: Vec<Series> = modes
            .iter()
            .map(|&mode| Series {
                label: mode.to_string(),
                points: report
                    .aggregates
                    .iter()
                    .filter(|a| a.mode == mode)
                    .map(|a| (a.p as f64, metric.of(a)))
                    .collect(),
            })
            .collect();
        let svg_name = file_name.replace(".csv", ".svg");
        write_line_chart(
            &dir.join(svg_name),
            title,
            "features (p)",
            metric.label(),
            &series,
        )?;
    }
    Ok(())
}

#[derive(Copy, Clone)]
enum Metric {
    Accuracy,
    SvFraction,
}

impl Metric {
    fn of(self, aggregate: &apsvm::experiments::Aggregate) -> f64 {
        match self {
            Metric::Accuracy => aggregate.mean_accuracy,
            Metric::SvFraction => aggregate.mean_sv_fraction,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Accuracy => "mean accuracy",
            Metric::SvFraction => "mean SV fraction",
        }
    }
}
