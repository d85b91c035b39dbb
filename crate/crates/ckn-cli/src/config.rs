//! Flags, the optional TOML config file and their resolution into a
//! validated [`RunConfig`]. Precedence: flag, then environment (for the
//! output directory), then config file, then built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use ckn_lab::stability_lab::{self as lab, presets, CorrectionLevel, ExampleSpec, Resolution};
use ckn_lab::FsParameters;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const OUT_DIR_ENV: &str = "CKN_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ckn", version, about = "Cylinder bubbles, decompositions and stability sweeps on the Felli-Schneider curve")]
pub struct Cli {
    /// TOML file whose keys mirror the long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [env: CKN_OUT_DIR] [default: ckn-out].
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Seed for multi-start perturbations [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the bubble field and print its diagnostics.
    Bubble(BubbleArgs),
    /// Decompose a field file into bubbles, kernels and remainder.
    Decompose(DecomposeArgs),
    /// Sweep the two-bubble family over (beta, R) and fit exponents.
    Sweep(SweepArgs),
}

#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct GridArgs {
    /// Nodes in t [default: 4097].
    #[arg(long)]
    pub n_t: Option<usize>,
    /// Highest angular degree [default: 8].
    #[arg(long)]
    pub max_mode: Option<usize>,
    /// Padding beyond the outermost center [default: 40/sqrt(Lambda)].
    #[arg(long)]
    pub pad: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BubbleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Field file to decompose.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Number of bubbles; inferred from the energy window when absent.
    #[arg(long)]
    pub nu: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Named schedule: kernel, beta0-p3, beta0-p2, beta0-p1.5, grid.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub beta_min: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub beta_count: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub beta_log: Option<bool>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub r_count: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub r_log: Option<bool>,
    /// none, first or full [default: full].
    #[arg(long)]
    pub level: Option<String>,
    /// Measure the positive part of the corrected field.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub positive_part: Option<bool>,
}

/// Contents of `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub d: Option<usize>,
    pub p: Option<f64>,
    pub n_t: Option<usize>,
    pub max_mode: Option<usize>,
    pub pad: Option<f64>,
    pub field: Option<PathBuf>,
    pub nu: Option<usize>,
    pub preset: Option<String>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub beta_count: Option<usize>,
    pub beta_log: Option<bool>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub r_count: Option<usize>,
    pub r_log: Option<bool>,
    pub level: Option<String>,
    pub positive_part: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPlan {
    /// Preset name, or `explicit`.
    pub source: String,
    pub betas: Vec<f64>,
    pub rs: Vec<f64>,
    pub level: CorrectionLevel,
    pub positive_part: bool,
    #[serde(skip)]
    pub schedule: Vec<ExampleSpec>,
}

#[derive(Clone, Debug)]
pub enum Experiment {
    Bubble { params: FsParameters },
    Decompose { field: PathBuf, nu: Option<usize> },
    Sweep { params: FsParameters, plan: SweepPlan },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub resolution: Resolution,
    pub experiment: Experiment,
}

fn cfg<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

fn params(d: Option<usize>, p: Option<f64>) -> CliResult<FsParameters> {
    FsParameters::new(d.unwrap_or(3), p.unwrap_or(2.0)).map_err(|e| CliError::Config(e.to_string()))
}

fn resolution(g: &GridArgs, file: &FileConfig) -> CliResult<Resolution> {
    let n_t = g.n_t.or(file.n_t).unwrap_or(4097);
    let max_mode = g.max_mode.or(file.max_mode).unwrap_or(8);
    let pad = g.pad.or(file.pad);
    if n_t < 5 {
        return cfg(format!("n-t must be at least 5, got {n_t}"));
    }
    if max_mode < 1 {
        return cfg("max-mode must be at least 1 (the kernels live in mode 1)");
    }
    if let Some(p) = pad {
        if !(p > 0.0 && p.is_finite()) {
            return cfg(format!("pad must be positive, got {p}"));
        }
    }
    Ok(Resolution { n_t, max_mode, pad })
}

fn sweep_plan(a: &SweepArgs, file: &FileConfig) -> CliResult<(FsParameters, SweepPlan)> {
    let level: CorrectionLevel = a
        .level
        .clone()
        .or(file.level.clone())
        .unwrap_or_else(|| "full".into())
        .parse()
        .map_err(|e: ckn_lab::Error| CliError::Config(e.to_string()))?;
    let positive_part = a.positive_part.or(file.positive_part).unwrap_or(false);
    let explicit = [a.beta_min, a.beta_max, a.r_min, a.r_max, file.beta_min, file.beta_max, file.r_min, file.r_max]
        .iter()
        .any(Option::is_some)
        || [a.beta_count, a.r_count, file.beta_count, file.r_count].iter().any(Option::is_some)
        || [a.beta_log, a.r_log, file.beta_log, file.r_log].iter().any(Option::is_some);
    let d = a.model.d.or(file.d);
    let p = a.model.p.or(file.p);
    let (params, source, betas, rs) = match a.preset.clone().or(file.preset.clone()) {
        Some(name) => {
            if explicit {
                return cfg("preset cannot be combined with explicit beta/R ranges");
            }
            let pre = presets::by_name(&name).map_err(|e| CliError::Config(e.to_string()))?;
            if d.is_some_and(|d| d != pre.d) || p.is_some_and(|p| p != pre.p) {
                return cfg(format!("preset '{name}' fixes d = {} and p = {}", pre.d, pre.p));
            }
            (pre.params().map_err(|e| CliError::Config(e.to_string()))?, name, pre.betas, pre.rs)
        }
        None => {
            let params = params(d, p)?;
            let range = |lo: f64, hi: f64, n: usize, log: bool, what: &str| -> CliResult<Vec<f64>> {
                if !(lo.is_finite() && hi.is_finite()) || hi < lo {
                    return cfg(format!("{what} range [{lo}, {hi}] is empty or invalid"));
                }
                if log && lo <= 0.0 {
                    return cfg(format!("log spacing needs {what}-min > 0"));
                }
                Ok(lab::spaced(lo, hi, n, log))
            };
            let betas = range(
                a.beta_min.or(file.beta_min).unwrap_or(0.02),
                a.beta_max.or(file.beta_max).unwrap_or(0.2),
                a.beta_count.or(file.beta_count).unwrap_or(6),
                a.beta_log.or(file.beta_log).unwrap_or(true),
                "beta",
            )?;
            let rs = range(
                a.r_min.or(file.r_min).unwrap_or(8.0),
                a.r_max.or(file.r_max).unwrap_or(18.0),
                a.r_count.or(file.r_count).unwrap_or(6),
                a.r_log.or(file.r_log).unwrap_or(false),
                "r",
            )?;
            (params, "explicit".to_string(), betas, rs)
        }
    };
    let schedule =
        lab::schedule(&betas, &rs, level, positive_part).map_err(|e| CliError::Config(e.to_string()))?;
    if schedule.is_empty() {
        return cfg("empty schedule");
    }
    Ok((params, SweepPlan { source, betas, rs, level, positive_part, schedule }))
}

impl RunConfig {
    /// Resolves and validates everything before any computation starts.
    pub fn resolve(cli: &Cli, env_out_dir: Option<PathBuf>) -> CliResult<Self> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let out_dir = cli
            .out_dir
            .clone()
            .or(env_out_dir)
            .or(file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("ckn-out"));
        let seed = cli.seed.or(file.seed).unwrap_or(0);
        let threads = cli.threads.or(file.threads);
        if threads == Some(0) {
            return cfg("threads must be at least 1");
        }
        let empty = GridArgs::default();
        let (experiment, grid_args) = match &cli.command {
            Command::Bubble(a) => (Experiment::Bubble { params: params(a.model.d.or(file.d), a.model.p.or(file.p))? }, &a.grid),
            Command::Decompose(a) => {
                let field = match a.field.clone().or(file.field.clone()) {
                    Some(f) => f,
                    None => return cfg("decompose needs --field"),
                };
                let nu = a.nu.or(file.nu);
                if nu == Some(0) {
                    return cfg("nu must be at least 1");
                }
                (Experiment::Decompose { field, nu }, &empty)
            }
            Command::Sweep(a) => {
                let (params, plan) = sweep_plan(a, &file)?;
                (Experiment::Sweep { params, plan }, &a.grid)
            }
        };
        let resolution = resolution(grid_args, &file)?;
        // Catch grid problems (e.g. too few nodes for the padding) up front.
        match &experiment {
            Experiment::Bubble { params } => {
                resolution.grid(*params, &[0.0]).map_err(|e| CliError::Config(e.to_string()))?;
            }
            Experiment::Sweep { params, plan } => {
                let r = plan.rs.iter().cloned().fold(0.0, f64::max);
                resolution.grid(*params, &[0.0, r]).map_err(|e| CliError::Config(e.to_string()))?;
            }
            Experiment::Decompose { .. } => {}
        }
        Ok(RunConfig { out_dir, seed, threads, resolution, experiment })
    }
}
