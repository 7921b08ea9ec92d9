//! The `segforge` command line: fixture generation, trajectory synthesis,
//! filtering, reward scoring, policy evaluation and corpus statistics.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;

use config::SynthFlags;

#[derive(Debug, Parser)]
#[command(name = "segforge", version, about = "Interactive segmentation trajectories, rewards and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML file with defaults for any setting.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed (falls back to the config file, then SEGFORGE_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Reply timeout for external backends and policies, in milliseconds.
    #[arg(long)]
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write seeded synthetic samples and their manifest.
    Fixtures(FixturesArgs),
    /// Synthesize expert trajectories for every manifest sample.
    Synth(SynthArgs),
    /// Keep trajectories whose final IoU reaches a threshold.
    Filter(FilterArgs),
    /// Score trajectories and compute group-relative advantages.
    Score(ScoreArgs),
    /// Evaluate a policy against a backend.
    Run(RunArgs),
    /// Summarize a trajectory corpus.
    Stats(StatsArgs),
    /// Re-execute recorded trajectories and compare metrics.
    Replay(ReplayArgs),
    /// Convert accepted trajectories into chat-format training samples.
    Sft(SftArgs),
    #[command(hide = true)]
    EchoBackend(EchoBackendArgs),
    #[command(hide = true)]
    EchoPolicy(EchoPolicyArgs),
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Trajectory JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
    /// oracle or cmd:<argv>.
    #[arg(long)]
    pub backend: Option<String>,
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Trajectory JSONL to read.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum final IoU (defaults to the synthesis filter threshold).
    #[arg(long)]
    pub filter_iou: Option<f64>,
    /// Skip unreadable lines instead of failing.
    #[arg(long)]
    pub skip_bad_lines: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Per-trajectory reward JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Trajectories sharing this key's value form one group.
    #[arg(long)]
    pub group_key: Option<String>,
    /// Clip range of the surrogate objective.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub skip_bad_lines: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Run report JSON to write.
    #[arg(long)]
    pub out: PathBuf,
    /// point, box, hybrid or cmd:<argv>.
    #[arg(long)]
    pub policy: Option<String>,
    /// oracle or cmd:<argv>.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub max_turns: Option<usize>,
    /// normalized or pixel.
    #[arg(long)]
    pub coord_mode: Option<String>,
    #[arg(long)]
    pub group_key: Option<String>,
    /// Also write the episodes as trajectory JSONL.
    #[arg(long)]
    pub trajectories_out: Option<PathBuf>,
    /// Write per-turn masks here and pass their paths to the policy.
    #[arg(long)]
    pub mask_dir: Option<PathBuf>,
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Write the summary here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub skip_bad_lines: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Per-trajectory comparison JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub backend: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SftArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EchoBackendArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "oracle")]
    pub mode: String,
    #[arg(long, default_value_t = 0)]
    pub delay_ms: u64,
}

#[derive(Debug, Args)]
pub struct EchoPolicyArgs {
    #[arg(long, default_value = "stop")]
    pub mode: String,
    /// Recorded trajectories for replay mode.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub delay_ms: u64,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    use commands::*;
    match cli.command {
        Command::Fixtures(a) => cmd_fixtures(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Filter(a) => cmd_filter(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Replay(a) => cmd_replay(&a),
        Command::Sft(a) => cmd_sft(&a),
        Command::EchoBackend(a) => cmd_echo_backend(&a),
        Command::EchoPolicy(a) => cmd_echo_policy(&a),
    }
}
