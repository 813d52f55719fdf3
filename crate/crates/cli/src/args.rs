use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tzsl_core::{Averaging, Mode, TrainConfig, UnsupervisedVariant};

#[derive(Debug, Parser)]
#[command(
    name = "tzsl",
    version,
    about = "Transductive zero-shot learning over feature embeddings"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic feature/semantic dataset.
    Synth(SynthArgs),
    /// Train the inductive and/or transductive stage.
    Train(TrainArgs),
    /// Score a checkpoint, optionally with hubness and the split-in-halves protocol.
    Eval(EvalArgs),
    /// Monte Carlo cross-validation over an (alpha, lambda, margin) grid.
    Cv(CvArgs),
    /// Train at several batch sizes and report unseen top-1 for each.
    SweepBatch(SweepArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Directory receiving every output file.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Flat key=value file with defaults for any flag of this command.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub semantics: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub seen: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub unseen: u64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub semantic_dim: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub feature_dim: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub per_class: u64,
    /// Extra test samples per seen class, for generalized evaluation.
    #[arg(long, default_value_t = 0)]
    pub seen_test_per_class: u64,
    #[arg(long, default_value_t = tzsl_core::SynthConfig::default().prototype_noise)]
    pub prototype_noise: f64,
    #[arg(long, default_value_t = tzsl_core::SynthConfig::default().sample_noise)]
    pub sample_noise: f64,
    /// 0 gives tight clusters, 1 the most diffuse.
    #[arg(long, default_value_t = 0.6)]
    pub cluster_quality: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageArg {
    Inductive,
    Transductive,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Zsl,
    Gzsl,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Zsl => Mode::Zsl,
            ModeArg::Gzsl => Mode::Gzsl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Triplet,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AveragingArg {
    Overall,
    PerClassMean,
}

impl From<AveragingArg> for Averaging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::Overall => Averaging::Overall,
            AveragingArg::PerClassMean => Averaging::PerClassMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Standard,
    Qfsl,
}

/// Hyperparameters shared by every command that trains.
#[derive(Debug, Args)]
pub struct Hyper {
    #[arg(long, value_enum, default_value_t = ModeArg::Zsl)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = VariantArg::Triplet)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0.15)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_seen: usize,
    /// Defaults to the seen batch size.
    #[arg(long)]
    pub batch_unlabeled: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub epochs_inductive: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs_transductive: usize,
    #[arg(long, default_value_t = tzsl_core::numerics::DEFAULT_HIDDEN)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop a stage early once the epoch loss plateaus.
    #[arg(long)]
    pub early_stop: bool,
}

impl Hyper {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            mode: self.mode.into(),
            alpha: self.alpha,
            lambda: self.lambda,
            margin: self.margin,
            lr: self.lr,
            batch_seen: self.batch_seen,
            batch_unlabeled: self.batch_unlabeled.unwrap_or(self.batch_seen),
            epochs_inductive: self.epochs_inductive,
            epochs_transductive: self.epochs_transductive,
            hidden: self.hidden,
            seed: self.seed,
            variant: match self.variant {
                VariantArg::Triplet => UnsupervisedVariant::Triplet,
                VariantArg::Euclidean => UnsupervisedVariant::Euclidean,
            },
            early_stop: self.early_stop,
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = StageArg::Both)]
    pub stage: StageArg,
    /// Inductive checkpoint to start the transductive stage from.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: Hyper,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Zsl)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = AveragingArg::Overall)]
    pub averaging: AveragingArg,
    /// Also report N_k skewness for this k.
    #[arg(long)]
    pub hubness: Option<usize>,
    /// `qfsl` retrains one transductive model per half of the test pool,
    /// starting from the (inductive) checkpoint.
    #[arg(long, value_enum, default_value_t = ProtocolArg::Standard)]
    pub protocol: ProtocolArg,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CvArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.15")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.0001")]
    pub lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub margins: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.17)]
    pub val_fraction: f64,
    #[command(flatten)]
    pub hyper: Hyper,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Seen and unlabeled batch size for each run.
    #[arg(long, value_delimiter = ',', required = true)]
    pub batch_sizes: Vec<usize>,
    #[command(flatten)]
    pub hyper: Hyper,
}
