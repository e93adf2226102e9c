use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use suber::commands::{self, CommandError, EvalTarget};
use suber::config::AppConfig;

/// Simulated-user environment for training and testing recommender agents.
#[derive(Debug, Parser)]
#[command(name = "suber", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for reports, checkpoints and logs.
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides a config key, e.g. `--set postprocess.perturb=gaussian:0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample user profiles and write users.jsonl.
    GenerateUsers(Common),
    /// Run the ablation suites and write ablation.json / ablation.csv.
    RunAblation(Common),
    /// Train the A2C agent; writes checkpoints and learning_curve.csv.
    Train(Common),
    /// Score a checkpoint (or the random baseline) and write metrics JSON.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Checkpoint written by `train`.
        #[arg(long, required_unless_present = "random")]
        checkpoint: Option<PathBuf>,
        /// Evaluate the uniform random baseline instead of a checkpoint.
        #[arg(long, conflicts_with = "checkpoint")]
        random: bool,
    },
    /// Step the environment with scripted or random actions and log a
    /// transcript.
    Simulate(Common),
}

fn load(common: &Common) -> Result<AppConfig, CommandError> {
    Ok(AppConfig::load(&common.config, &common.overrides)?.with_seed(common.seed))
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CommandError> {
    match &cli.command {
        Command::GenerateUsers(c) => commands::generate_users_cmd(load(c)?, &c.output_dir),
        Command::RunAblation(c) => commands::run_ablation_cmd(load(c)?, &c.output_dir),
        Command::Train(c) => commands::train_cmd(load(c)?, &c.output_dir),
        Command::Evaluate {
            common,
            checkpoint,
            random,
        } => {
            let target = match (checkpoint, random) {
                (Some(p), false) => EvalTarget::Checkpoint(p),
                _ => EvalTarget::Random,
            };
            commands::evaluate_cmd(load(common)?, target, &common.output_dir)
        }
        Command::Simulate(c) => commands::simulate_cmd(load(c)?, &c.output_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
