//! Command-line front end: model documents, theory and Monte Carlo runs,
//! comparisons and edge fits, written as CSV tables plus a manifest.
//!
//! Exit codes: 0 success, 2 usage, 3 model document or validation, 4
//! numerical failure (including flagged theory curves, whose files are still
//! written), 5 I/O. Failures print one JSON object on stderr.

pub mod commands;
pub mod document;
pub mod output;
pub mod spectra;

use bures_core::mc::EntryDistribution;
use bures_core::solver::GridSpec;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

pub use commands::{run, RunReport};
pub use document::{format_model_document, parse_model_document, parse_model_spec, DocumentError};

#[derive(Parser, Debug, Clone)]
#[command(name = "bures", version, about = "Spectral densities of generalized Bures products")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Solve the master relations and write density curves and geometry.
    Theory(TheoryArgs),
    /// Sample the model and write histograms, moments and entropy.
    Mc(McArgs),
    /// Monte Carlo histograms joined with bin-averaged theory and z-scores.
    Compare(McArgs),
    /// Fit the erfc form factor at the borderlines for several sizes.
    FitErfc(FitArgs),
    /// Closed-form curves.
    Oracle(OracleArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindArg {
    Eigen,
    Singular,
    /// Both spectra for square models, singular values otherwise.
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model document.
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    /// `default`, `mixed:<n_log>:<n_lin>`, `linear:<lo>:<hi>:<n>` or `log:<lo>:<hi>:<n>`.
    #[arg(long, default_value = "default")]
    pub grid: GridSpec,
    #[arg(long, value_enum, default_value = "both")]
    pub kind: KindArg,
}

#[derive(Args, Debug, Clone)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Outer matrix size.
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    #[arg(long, default_value_t = 40)]
    pub samples: usize,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = "gaussian")]
    pub entries: EntryDistribution,
}

#[derive(Args, Debug, Clone)]
pub struct McArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub kind: KindArg,
    /// Also write the raw spectra in binary form.
    #[arg(long)]
    pub spectra: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Outer sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
    pub n: Vec<usize>,
    /// Samples at the largest size; smaller sizes get proportionally more,
    /// so every size contributes about the same number of eigenvalues.
    #[arg(long, default_value_t = 40)]
    pub samples: usize,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = "gaussian")]
    pub entries: EntryDistribution,
    #[arg(long, default_value_t = 32)]
    pub bins: usize,
    /// Half width of the fit window in units of `1/sqrt(N)`.
    #[arg(long, default_value_t = 8.0)]
    pub half_width: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Singular-value density of the Bures model.
    Bures,
    /// Radial density of a product of `J` equal-weight sums of `L` unitaries.
    TExample1,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "default")]
    pub grid: GridSpec,
    #[arg(long, default_value_t = 1)]
    pub j: usize,
    #[arg(long, default_value_t = 2)]
    pub l: usize,
    #[arg(long, default_value_t = 1.0)]
    pub w: f64,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr as one JSON object.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(report) if report.flagged => {
            eprintln!("{}", serde_json::json!({ "error": "flagged", "diagnostics": report.diagnostics }));
            4
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
