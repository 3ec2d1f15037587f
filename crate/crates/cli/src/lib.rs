//! Batch front end: explain proteins, score explanations, analyse
//! substitution preferences and plot learning curves.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foldcf::cfengine::{CfConfig, ObjectiveMode};
use foldcf::exchange::{IndicatorKind, Inversion, Pairing};

pub mod error;
pub mod evaluate;
pub mod exchangeability;
pub mod explain;
pub mod io;
pub mod plot;

pub use error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "FOLDCF_OUT";

#[derive(Debug, Parser)]
#[command(name = "foldcf", version, about = "Counterfactual explanations for protein structure predictors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimise a counterfactual explanation for every record of a FASTA file.
    Explain(ExplainArgs),
    /// Score explanations (and baselines) under PN or PS.
    Evaluate(EvaluateArgs),
    /// Substitution statistics, exchangeability matrices and indicator correlations.
    Exchangeability(ExchangeArgs),
    /// Render a trace CSV as an SVG learning curve.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorKind {
    Surrogate,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct ExternalArgs {
    /// Shell command for the external predictor; `{workdir}` expands to its request directory.
    #[arg(long = "external-command", value_name = "CMD")]
    pub external_command: Option<String>,
    /// Seconds before an external prediction is killed.
    #[arg(long, default_value_t = 3600.0)]
    pub timeout: f64,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub fasta: PathBuf,
    /// Directory of `<id>.a3m|.aln|.msa` alignments.
    #[arg(long = "msa-dir")]
    pub msa_dir: Option<PathBuf>,
    /// Skip records with fewer than 80 resolved residues.
    #[arg(long = "length-filter")]
    pub length_filter: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    #[arg(long, env = OUT_ENV, default_value = "runs")]
    pub out: PathBuf,
}

fn parse_mode(s: &str) -> Result<ObjectiveMode, String> {
    s.parse().map_err(|e: foldcf::cfengine::CfError| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[arg(long, value_parser = parse_mode)]
    pub mode: ObjectiveMode,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = PredictorKind::Surrogate)]
    pub predictor: PredictorKind,
    #[command(flatten)]
    pub external: ExternalArgs,
    /// Seeds both the surrogate weights and the optimisation.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
    /// Proteins optimised in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "negative-slope")]
    pub negative_slope: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub phases: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long = "chunk-len")]
    pub chunk_len: Option<usize>,
}

impl ExplainArgs {
    pub fn config(&self) -> CfConfig {
        let d = CfConfig::for_mode(self.mode);
        CfConfig {
            alpha: self.alpha.unwrap_or(d.alpha),
            lambda: self.lambda.unwrap_or(d.lambda),
            negative_slope: self.negative_slope.unwrap_or(d.negative_slope),
            steps_per_phase: self.steps.unwrap_or(d.steps_per_phase),
            phases: self.phases.unwrap_or(d.phases),
            lr: self.lr.unwrap_or(d.lr),
            binarize_threshold: self.threshold.unwrap_or(d.binarize_threshold),
            chunk_len: self.chunk_len.unwrap_or(d.chunk_len),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Pn,
    Ps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum BaselineKind {
    Random,
    Evolutionary,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub criterion: CriterionArg,
    #[command(flatten)]
    pub input: InputArgs,
    /// Directory of explanation reports, scored as method "ours".
    #[arg(long)]
    pub reports: Option<PathBuf>,
    /// Which reports to score (defaults: deletion-necessary for PN, deletion-sufficient for PS).
    #[arg(long = "report-mode", value_parser = parse_mode)]
    pub report_mode: Option<ObjectiveMode>,
    #[arg(long, value_enum)]
    pub baseline: Vec<BaselineKind>,
    /// Baseline explanation size as a fraction of the length (defaults 0.33 for PN, 0.50 for PS).
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Seed of the random baseline.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PredictorKind::Surrogate)]
    pub predictor: PredictorKind,
    #[arg(long = "surrogate-seed", default_value_t = 42)]
    pub surrogate_seed: u64,
    #[command(flatten)]
    pub external: ExternalArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureArg {
    /// Substitution counts bundled with the crate.
    Builtin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Distance,
    Exchangeability,
}

impl From<KindArg> for IndicatorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Distance => IndicatorKind::Distance,
            KindArg::Exchangeability => IndicatorKind::Exchangeability,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InversionArg {
    Reciprocal,
    Negate,
}

impl From<InversionArg> for Inversion {
    fn from(k: InversionArg) -> Self {
        match k {
            InversionArg::Reciprocal => Inversion::Reciprocal,
            InversionArg::Negate => Inversion::Negate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairingArg {
    Ordered,
    Symmetrized,
}

impl From<PairingArg> for Pairing {
    fn from(k: PairingArg) -> Self {
        match k {
            PairingArg::Ordered => Pairing::Ordered,
            PairingArg::Symmetrized => Pairing::Symmetrized,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExchangeArgs {
    /// Directory of substitution reports.
    #[arg(long, conflicts_with = "fixture")]
    pub reports: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub fixture: Option<FixtureArg>,
    /// 20 x 20 indicator CSV; repeat for several.
    #[arg(long)]
    pub indicator: Vec<PathBuf>,
    #[arg(long = "indicator-kind", value_enum, default_value_t = KindArg::Distance)]
    pub indicator_kind: KindArg,
    #[arg(long, value_enum, default_value_t = InversionArg::Reciprocal)]
    pub inversion: InversionArg,
    #[arg(long, value_enum, default_value_t = PairingArg::Ordered)]
    pub pairing: PairingArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Output SVG; defaults to the trace path with an `.svg` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub title: Option<String>,
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Explain(a) => explain::run(&a),
        Command::Evaluate(a) => evaluate::run(&a),
        Command::Exchangeability(a) => exchangeability::run(&a),
        Command::Plot(a) => plot::run(&a),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => 2,
    }
}

pub(crate) fn thread_pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}
