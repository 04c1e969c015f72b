use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use covauv::commands::{cmd_baseline, cmd_eval, cmd_sweep_epsilon, cmd_train, BaselineKind};
use covauv::config::ExperimentConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "covauv",
    about = "Covert multi-AUV cooperation simulator and hierarchical PPO trainer",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file of `key = value` lines (defaults are the reference tables).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override individual keys, e.g. --set env.epsilon=0.01 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed (overrides train.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Rollout worker count (overrides train.workers).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (overrides out.dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut overrides = Vec::new();
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got \"{kv}\"");
            };
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(seed) = self.seed {
            overrides.push(("train.seed".into(), seed.to_string()));
        }
        if let Some(workers) = self.workers {
            overrides.push(("train.workers".into(), workers.to_string()));
        }
        if let Some(out) = &self.out {
            overrides.push(("out.dir".into(), out.display().to_string()));
        }
        Ok(ExperimentConfig::load(self.config.as_deref(), &overrides)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKindArg {
    RandomG,
    RandomV,
}

#[derive(Subcommand)]
enum Command {
    /// Train the hierarchical policies and write metrics plus checkpoints.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate a checkpoint with deterministic policies.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        /// Also write trajectories.jsonl (one record per selected AUV slot).
        #[arg(long)]
        dump_trajectories: bool,
    },
    /// Random-decision baselines sharing the eval summary schema.
    Baseline {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        kind: BaselineKindArg,
        /// Optional checkpoint for the policy-driven side.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        /// random-v only: draw power uniformly instead of from the policy.
        #[arg(long)]
        uniform_power: bool,
        #[arg(long)]
        dump_trajectories: bool,
    },
    /// Efficiency-vs-covertness frontier over a list of epsilons.
    SweepEpsilon {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated list, e.g. 1,0.5,0.1,0.05,0.02,0.01
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        eval_episodes: usize,
        /// Train a fresh policy per epsilon under out/eps_<eps>/.
        #[arg(long)]
        train_in_place: bool,
        /// Checkpoint path template with `{eps}` placeholder.
        #[arg(long)]
        checkpoint_template: Option<String>,
    },
}

fn print_summary(label: &str, r: &covauv::EvalReport) {
    let s = &r.summary;
    println!("{label} over {} episodes:", s.episodes);
    println!("  zeta        {:>12.6} +- {:.6}", s.coverage.0, s.coverage.1);
    println!("  eta         {:>12.6} +- {:.6}", s.efficiency.0, s.efficiency.1);
    println!("  t_task      {:>12.3} +- {:.3}", s.t_task.0, s.t_task.1);
    println!("  kl          {:>12.6} +- {:.6}", s.kl_mean.0, s.kl_mean.1);
    println!("  covert_rate {:>12.4} +- {:.4}", s.covert_rate.0, s.covert_rate.1);
    println!("  micro_rwd   {:>12.3} +- {:.3}", s.micro_reward.0, s.micro_reward.1);
    println!("  macro_rwd   {:>12.3} +- {:.3}", s.macro_reward.0, s.macro_reward.1);
    println!("  summary: {}", r.summary_path.display());
    if let Some((path, n)) = &r.trajectories {
        println!("  trajectories: {} ({n} records)", path.display());
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { common } => {
            let cfg = common.resolve()?;
            let report = cmd_train(&cfg)?;
            println!(
                "trained {} episodes ({} micro updates, {} macro updates)",
                report.episodes.len(),
                report.micro_updates,
                report.macro_updates
            );
            println!("  metrics: {}", report.metrics_path.display());
            println!("  final checkpoint: {}", report.final_checkpoint.display());
            println!("  resolved config: {}", report.resolved_config.display());
            println!("  parameter checksum: {:016x}", report.param_checksum);
        }
        Command::Eval {
            common,
            checkpoint,
            episodes,
            dump_trajectories,
        } => {
            let cfg = common.resolve()?;
            let report = cmd_eval(&cfg, &checkpoint, episodes, dump_trajectories)?;
            print_summary("eval", &report);
        }
        Command::Baseline {
            common,
            kind,
            checkpoint,
            episodes,
            uniform_power,
            dump_trajectories,
        } => {
            let cfg = common.resolve()?;
            let kind = match kind {
                BaselineKindArg::RandomG => BaselineKind::RandomG,
                BaselineKindArg::RandomV => BaselineKind::RandomV,
            };
            let report = cmd_baseline(
                &cfg,
                kind,
                checkpoint.as_deref(),
                episodes,
                uniform_power,
                dump_trajectories,
            )?;
            print_summary("baseline", &report);
        }
        Command::SweepEpsilon {
            common,
            epsilons,
            eval_episodes,
            train_in_place,
            checkpoint_template,
        } => {
            let cfg = common.resolve()?;
            let (rows, path) = cmd_sweep_epsilon(
                &cfg,
                &epsilons,
                eval_episodes,
                train_in_place,
                checkpoint_template.as_deref(),
            )?;
            println!("epsilon,mean_eta,mean_kl");
            for r in &rows {
                println!("{},{},{}", r.epsilon, r.mean_eta, r.mean_kl);
            }
            println!("written to {}", path.display());
        }
    }
    Ok(())
}
