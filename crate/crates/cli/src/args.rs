use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "canary-audit", version, about = "One-shot empirical privacy estimation with random canaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Master seed; run i of a sweep uses seed + i.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for reports and cosine files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads (0 = all cores). CANARY_AUDIT_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Audit the Gaussian sum mechanism with random unit canaries.
    GaussAudit(GaussArgs),
    /// Simulate DP-FedAvg with canaries and estimate ε from a JSON config.
    FlAudit(FlArgs),
    /// Exact ε for δ (or δ for ε) between two Gaussians.
    Epsilon(EpsilonArgs),
    /// High-confidence ε lower bound from a cosine CSV.
    LowerBound(LowerBoundArgs),
    /// Anderson-Darling normality test on a CSV column.
    ValidateNormality(NormalityArgs),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Self::GaussAudit(a) => &a.common,
            Self::FlAudit(a) => &a.common,
            Self::Epsilon(a) => &a.common,
            Self::LowerBound(a) => &a.common,
            Self::ValidateNormality(a) => &a.common,
        }
    }
}

#[derive(Debug, Args)]
pub struct GaussArgs {
    /// Instance JSON (dim, noise_std, canary_count, delta, seed and optional
    /// data); replaces the individual flags.
    #[arg(long, conflicts_with_all = ["dim", "sigma", "canaries", "delta"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub dim: Option<usize>,
    /// Noise standard deviation.
    #[arg(long, required_unless_present = "config")]
    pub sigma: Option<f64>,
    /// Canaries per run; defaults to round(√dim).
    #[arg(long)]
    pub canaries: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FlArgs {
    /// Federated configuration JSON.
    pub config: PathBuf,
    /// Independent runs whose cosines are pooled before estimation.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Trace every round and report the all-iterates estimate.
    #[arg(long)]
    pub all_iterates: bool,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EpsilonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub mu2: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma2: f64,
    /// Print ε for this δ.
    #[arg(long, required_unless_present = "epsilon", conflicts_with = "epsilon")]
    pub delta: Option<f64>,
    /// Print δ for this ε.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LowerBoundArgs {
    /// CSV with header round,canary_id,label,cosine.
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Rows of this round (-1 = final model).
    #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
    pub round: i64,
    /// Use the max over traced rounds per canary instead of one round.
    #[arg(long, conflicts_with = "round")]
    pub max_over_rounds: bool,
    /// Bound the FPR from the unobserved rows instead of the analytic null.
    #[arg(long)]
    pub empirical_null: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct NormalityArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, default_value = "cosine")]
    pub column: String,
    /// Keep rows whose `label` column equals this.
    #[arg(long)]
    pub label: Option<String>,
    /// Keep rows whose `round` column equals this.
    #[arg(long, allow_negative_numbers = true)]
    pub round: Option<i64>,
    #[command(flatten)]
    pub common: Common,
}
