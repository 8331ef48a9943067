//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use linda_core::simulate::{CovariateDesign, Setting};
use linda_core::{Bandwidth, KdeConfig, LindaConfig, Method, ZeroStrategy};

use crate::commands::analyze::{self, AnalyzeOptions, Filters};
use crate::commands::plot::{self, PlotKind};
use crate::commands::simulate::{self, SimulateOptions};
use crate::error::{Error, Result};
use crate::io::parse_delimiter;

#[derive(Debug, Parser)]
#[command(name = "linda", version, about = "Differential abundance analysis of compositional count data")]
pub struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Skip writing the `.manifest.json` sidecar.
    #[arg(long, global = true)]
    pub no_manifest: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test every taxon for association with the covariate of interest.
    Analyze(AnalyzeArgs),
    /// Run the synthetic evaluation and report FDR and power.
    Simulate(SimulateArgs),
    /// Derive effect-size or volcano plot tables from a results file.
    PlotData(PlotDataArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ZeroArg {
    Adaptive,
    Pseudo,
    Imputation,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Auto,
    Ols,
    Lmm,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "adaptive")]
    pub zero_handling: ZeroArg,
    /// p-value cutoff of the library-size test used by adaptive zero handling.
    #[arg(long, default_value_t = ZeroStrategy::DEFAULT_ADAPTIVE_THRESHOLD)]
    pub adaptive_threshold: f64,
    #[arg(long, value_enum, default_value = "on")]
    pub bias: Switch,
    /// `auto` (Silverman's rule) or a positive bandwidth.
    #[arg(long, default_value = "auto")]
    pub kde_bandwidth: String,
    #[arg(long, default_value_t = 512)]
    pub kde_grid: usize,
}

impl ModelArgs {
    fn config(&self, q: f64) -> Result<LindaConfig> {
        let zero = match self.zero_handling {
            ZeroArg::Pseudo => ZeroStrategy::Pseudo,
            ZeroArg::Imputation => ZeroStrategy::Imputation,
            ZeroArg::Adaptive => {
                if !(self.adaptive_threshold > 0.0 && self.adaptive_threshold < 1.0) {
                    return Err(Error::Usage(format!(
                        "--adaptive-threshold must lie in (0, 1), got {}",
                        self.adaptive_threshold
                    )));
                }
                ZeroStrategy::Adaptive { threshold: self.adaptive_threshold }
            }
        };
        let bandwidth = match self.kde_bandwidth.as_str() {
            "auto" => Bandwidth::Silverman,
            v => match v.parse::<f64>() {
                Ok(h) if h > 0.0 && h.is_finite() => Bandwidth::Fixed(h),
                _ => return Err(Error::Usage(format!("--kde-bandwidth must be `auto` or positive, got `{v}`"))),
            },
        };
        if self.kde_grid < 2 {
            return Err(Error::Usage("--kde-grid must be at least 2".into()));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Usage(format!("the target FDR must lie in (0, 1), got {q}")));
        }
        Ok(LindaConfig {
            zero,
            bias_correction: matches!(self.bias, Switch::On),
            kde: KdeConfig { bandwidth, grid_points: self.kde_grid },
            q,
        })
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Taxa x samples count table (first row sample ids, first column taxon ids).
    #[arg(long)]
    pub counts: PathBuf,
    /// Samples x variables metadata table.
    #[arg(long)]
    pub metadata: PathBuf,
    /// `u + c1 + ...`, optionally with `| g` or `(1 | g)` for a random intercept.
    #[arg(long)]
    pub formula: String,
    /// Grouping variable for a random intercept.
    #[arg(long)]
    pub random_intercept: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub fdr: f64,
    /// Drop samples with fewer reads.
    #[arg(long, default_value_t = 1000)]
    pub min_libsize: u64,
    /// Drop taxa present in a smaller fraction of samples.
    #[arg(long, default_value_t = 0.1)]
    pub min_prevalence: f64,
    /// Per-taxon winsorization quantile.
    #[arg(long, default_value_t = 0.97, conflicts_with = "no_winsor")]
    pub winsor: f64,
    #[arg(long)]
    pub no_winsor: bool,
    /// Field delimiter of the count table (`tab`, `comma` or one character).
    #[arg(long, value_parser = parse_delimiter)]
    pub counts_delimiter: Option<u8>,
    #[arg(long, value_parser = parse_delimiter)]
    pub metadata_delimiter: Option<u8>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub setting: Setting,
    #[arg(long, default_value = "C0")]
    pub design: CovariateDesign,
    #[arg(long, default_value_t = 500)]
    pub m: usize,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Fraction of differentially abundant taxa.
    #[arg(long, default_value_t = 0.05)]
    pub gamma: f64,
    /// Effect-size index in 1..=6; repeatable. All six when omitted.
    #[arg(long = "effect-index")]
    pub effect_index: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// `auto` uses the mixed model for grouped settings.
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub q: f64,
    /// Draw effect signs at random instead of all positive.
    #[arg(long)]
    pub mixed_signs: bool,
    /// Per-taxon parameter table with `beta0` and `sigma2` columns.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_parser = parse_delimiter)]
    pub params_delimiter: Option<u8>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub kind: PlotKind,
    /// Recompute rejections at this FDR level from the adjusted p-values.
    #[arg(long)]
    pub fdr: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn command_line(args: &[OsString]) -> Vec<String> {
    args.iter().map(|a| a.to_string_lossy().into_owned()).collect()
}

pub fn execute(cli: Cli, command: Vec<String>) -> Result<()> {
    let manifest = !cli.no_manifest;
    match cli.command {
        Command::Analyze(a) => {
            let opts = AnalyzeOptions {
                config: a.model.config(a.fdr)?,
                counts: a.counts,
                metadata: a.metadata,
                formula: a.formula,
                random_intercept: a.random_intercept,
                out: a.out,
                counts_delimiter: a.counts_delimiter,
                metadata_delimiter: a.metadata_delimiter,
                filters: Filters {
                    min_libsize: a.min_libsize,
                    min_prevalence: a.min_prevalence,
                    winsor: (!a.no_winsor).then_some(a.winsor),
                },
                write_manifest: manifest,
            };
            analyze::run(&opts, command).map(|_| ())
        }
        Command::Simulate(s) => {
            let method = match s.method {
                MethodArg::Ols => Method::Ols,
                MethodArg::Lmm => Method::Lmm,
                MethodArg::Auto if s.setting.is_grouped() => Method::Lmm,
                MethodArg::Auto => Method::Ols,
            };
            let opts = SimulateOptions {
                config: s.model.config(s.q)?,
                setting: s.setting,
                design: s.design,
                m: s.m,
                n: s.n,
                gamma: s.gamma,
                effect_indices: if s.effect_index.is_empty() { (1..=6).collect() } else { s.effect_index },
                replicates: s.reps,
                seed: s.seed,
                method,
                mixed_signs: s.mixed_signs,
                params: s.params,
                params_delimiter: s.params_delimiter,
                out: s.out,
                write_manifest: manifest,
            };
            simulate::run(&opts, command).map(|_| ())
        }
        Command::PlotData(p) => plot::run(&p.results, p.kind, p.fdr, &p.out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return 2;
        }
    }
    match execute(cli, command_line(&args)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
