//! Config-file support. Precedence everywhere: command-line flag, then
//! config file, then built-in default.

use std::path::Path;

use apsvm::{Error, Result};
use serde::Deserialize;

/// Optional settings readable from `--config file.json`. Unknown keys are
/// rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kernel: Option<String>,
    pub gamma: Option<String>,
    pub mode: Option<String>,
    pub cost: Option<f64>,
    pub cost_grid: Option<String>,
    pub ridge: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub subsample_size: Option<usize>,
    pub draws: Option<usize>,
    pub p_list: Option<String>,
    pub repeats: Option<usize>,
    pub sigmas: Option<String>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub n_normals: Option<usize>,
    pub gamma_policy: Option<String>,
    pub n_features: Option<usize>,
    pub folds: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text).map_err(|e| {
                    Error::InvalidParameter(format!("config file {}: {e}", path.display()))
                })
            }
        }
    }
}

/// First of: explicit flag, config value, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn parse_comma_floats(text: &str, what: &str) -> Result<Vec<f64>> {
    let values: std::result::Result<Vec<f64>, _> =
        text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match values {
        Ok(values) if !values.is_empty() => Ok(values),
        _ => Err(Error::InvalidParameter(format!(
            "{what}: expected comma-separated reals, got `{text}`"
        ))),
    }
}

pub fn parse_comma_usize(text: &str, what: &str) -> Result<Vec<usize>> {
    let values: std::result::Result<Vec<usize>, _> =
        text.split(',').map(|t| t.trim().parse::<usize>()).collect();
    match values {
        Ok(values) if !values.is_empty() => Ok(values),
        _ => Err(Error::InvalidParameter(format!(
            "{what}: expected comma-separated counts, got `{text}`"
        ))),
    }
}

/// Grid spec: the literal `default` (2^-8..2^8, 17 points) or comma reals.
pub fn parse_cost_grid(text: &str) -> Result<Vec<f64>> {
    if text.trim() == "default" {
        return Ok(apsvm::experiments::default_cost_grid());
    }
    let grid = parse_comma_floats(text, "cost grid")?;
    if grid.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
        return Err(Error::InvalidParameter(
            "cost grid entries must be positive reals".into(),
        ));
    }
    Ok(grid)
}

pub fn parse_kernel(text: &str) -> Result<KernelChoice> {
    match text.to_lowercase().as_str() {
        "linear" => Ok(KernelChoice::Linear),
        "rbf" => Ok(KernelChoice::Rbf),
        other => Err(Error::InvalidParameter(format!(
            "unknown kernel `{other}` (expected `linear` or `rbf`)"
        ))),
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum KernelChoice {
    Linear,
    Rbf,
}

/// `auto`, `auto-squared`, or an explicit positive value.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum GammaChoice {
    Auto,
    AutoSquared,
    Fixed(f64),
}

pub fn parse_gamma(text: &str) -> Result<GammaChoice> {
    match text.to_lowercase().as_str() {
        "auto" => Ok(GammaChoice::Auto),
        "auto-squared" => Ok(GammaChoice::AutoSquared),
        other => match other.parse::<f64>() {
            Ok(value) if value.is_finite() && value > 0.0 => Ok(GammaChoice::Fixed(value)),
            _ => Err(Error::InvalidParameter(format!(
                "gamma must be `auto`, `auto-squared`, or a positive real, got `{text}`"
            ))),
        },
    }
}

pub fn parse_mode(text: &str) -> Result<apsvm::Mode> {
    match text.to_lowercase().as_str() {
        "standard" => Ok(apsvm::Mode::Standard),
        "antiprofile" | "anti-profile" => Ok(apsvm::Mode::AntiProfile),
        other => Err(Error::InvalidParameter(format!(
            "unknown mode `{other}` (expected `standard` or `antiprofile`)"
        ))),
    }
}

pub fn parse_sigmas(text: &str) -> Result<(f64, f64, f64)> {
    let values = parse_comma_floats(text, "sigmas")?;
    if values.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "sigmas: expected exactly three values (normal, neg, pos), got {}",
            values.len()
        )));
    }
    Ok((values[0], values[1], values[2]))
}
