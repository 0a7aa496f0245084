use std::path::PathBuf;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{ArgAction, Args, Parser, Subcommand};
use isac_core::agent::Variant;
use isac_core::envs::EnvKind;

use crate::config::{FileConfig, Resolved, SeedSpec};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "isac-lab",
    version,
    about = "Train and compare soft actor-critic replay variants"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one variant on every seed and write metrics, summary,
    /// checkpoints and a plot.
    Train(TrainArgs),
    /// Train several variants on the same seeds and tabulate them.
    Compare(CompareArgs),
    /// Draw learning curves from metrics files.
    Plot(PlotArgs),
}

fn env_parser() -> impl TypedValueParser<Value = EnvKind> {
    PossibleValuesParser::new(["pendulum", "reacher"])
        .map(|s| s.parse::<EnvKind>().expect("listed value"))
}

fn variant_parser() -> impl TypedValueParser<Value = Variant> {
    PossibleValuesParser::new(Variant::ALL.map(Variant::name))
        .map(|s| s.parse::<Variant>().expect("listed value"))
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// TOML configuration file; flags override its keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = env_parser())]
    pub env: Option<EnvKind>,
    #[arg(long, value_parser = variant_parser())]
    pub variant: Option<Variant>,
    /// Seed count (`5`), list (`1,4,9`) or range (`0..5`).
    #[arg(long)]
    pub seeds: Option<SeedSpec>,
    #[arg(long)]
    pub total_steps: Option<u64>,
    /// Environment steps per training unit (one evaluation each).
    #[arg(long)]
    pub unit_steps: Option<u64>,
    /// SDP cosine-similarity threshold.
    #[arg(long)]
    pub zeta_th: Option<f64>,
    /// Episodes held back before they enter the replay buffer.
    #[arg(long)]
    pub xi: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Output directory [default: $ISAC_LAB_OUT, then ./runs].
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Name used in metrics files and tables instead of the variant.
    #[arg(long)]
    pub label: Option<String>,
    /// Run seeds one after another instead of on the thread pool.
    #[arg(long)]
    pub sequential: bool,
}

impl RunFlags {
    pub fn layer(&self) -> FileConfig {
        FileConfig {
            env: self.env,
            variant: self.variant,
            label: self.label.clone(),
            seeds: self.seeds.clone(),
            total_steps: self.total_steps,
            unit_steps: self.unit_steps,
            zeta_th: self.zeta_th,
            xi: self.xi,
            batch_size: self.batch_size,
            lr: self.lr,
            gamma: self.gamma,
            out_dir: self.out_dir.clone(),
            ..Default::default()
        }
    }

    pub fn file(&self) -> Result<FileConfig, CliError> {
        match &self.config {
            Some(path) => FileConfig::load(path),
            None => Ok(FileConfig::default()),
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        self.file()?.overlay(&self.layer()).resolve()
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Target score for steps-to-target; defaults to this run's own final
    /// window average.
    #[arg(long)]
    pub target_score: Option<f64>,
    /// Also write each seed's final replay buffer as tab-separated text
    /// (isac only).
    #[arg(long)]
    pub dump_buffer: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Settings shared by every row.
    #[command(flatten)]
    pub run: RunFlags,
    /// Config file for one row; repeat for more rows.
    #[arg(long = "row", value_name = "PATH")]
    pub rows: Vec<PathBuf>,
    /// One row per listed variant.
    #[arg(long, value_delimiter = ',', value_parser = variant_parser())]
    pub variants: Vec<Variant>,
    /// One isac row per listed SDP threshold.
    #[arg(long, value_delimiter = ',')]
    pub zeta_ths: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Metrics files; each may hold several variants.
    #[arg(required = true)]
    pub metrics: Vec<PathBuf>,
    /// Output SVG path.
    #[arg(long, short, default_value = "curves.svg")]
    pub out: PathBuf,
    /// Moving-average window in units.
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    #[arg(long)]
    pub title: Option<String>,
}
