//! Subcommand implementations: train, eval, baseline, sweep-epsilon.

use crate::config::ExperimentConfig;
use crate::metrics::{
    write_summary_csv, write_sweep_csv, MetricsWriter, SweepRow, TrajectoryWriter,
};
use anyhow::{bail, Context, Result};
use covauv_core::rl::{
    rollout_episodes, summarize, train_hmappo, Checkpoint, EpisodeMetrics, MacroMode, MicroMode,
    Policies, RolloutSummary, TrainOutput,
};
use covauv_core::seeding::derive_seed;
use std::path::{Path, PathBuf};

/// Outcome of `covauv train`.
#[derive(Debug)]
pub struct TrainReport {
    pub metrics_path: PathBuf,
    pub final_checkpoint: PathBuf,
    pub resolved_config: PathBuf,
    pub episodes: Vec<EpisodeMetrics>,
    pub param_checksum: u64,
    pub micro_updates: usize,
    pub macro_updates: usize,
}

/// Outcome of `covauv eval` / `covauv baseline`.
#[derive(Debug)]
pub struct EvalReport {
    pub summary: RolloutSummary,
    pub metrics: Vec<EpisodeMetrics>,
    pub summary_path: PathBuf,
    pub trajectories: Option<(PathBuf, usize)>,
}

fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create output directory {}", cfg.out_dir.display()))
}

fn echo_config(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let path = cfg.out_dir.join("resolved_config.txt");
    std::fs::write(&path, cfg.echo())
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

pub fn save_checkpoint(path: &Path, policies: &Policies, config_hash: u64) -> Result<()> {
    std::fs::write(path, Checkpoint::from_policies(policies, config_hash).to_bytes())
        .with_context(|| format!("cannot write checkpoint {}", path.display()))
}

pub fn load_checkpoint(path: &Path, cfg: &ExperimentConfig) -> Result<Policies> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read checkpoint {}", path.display()))?;
    let ckpt = Checkpoint::from_bytes(&bytes)?;
    let expected = cfg.structural_hash();
    if ckpt.config_hash != expected {
        bail!(
            "checkpoint {} was trained under config hash {:016x}, current config hashes to {:016x}",
            path.display(),
            ckpt.config_hash,
            expected
        );
    }
    let mut policies = Policies::new(&cfg.train);
    ckpt.apply_to(&mut policies)?;
    Ok(policies)
}

/// Trains per the resolved config, streaming metrics per episode and writing
/// periodic plus final checkpoints.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    ensure_out_dir(cfg)?;
    let resolved_config = echo_config(cfg)?;
    let config_hash = cfg.structural_hash();
    let metrics_path = cfg.out_dir.join("metrics.csv");
    let mut writer = MetricsWriter::create(
        &metrics_path,
        cfg.train.seed,
        cfg.train.workers,
        config_hash,
    )?;

    let every = cfg.train.checkpoint_every.max(1);
    let out_dir = cfg.out_dir.clone();
    let mut io_error: Option<anyhow::Error> = None;
    let output: TrainOutput = train_hmappo(&cfg.train, |m, policies| {
        if let Err(e) = writer.write_episode(m) {
            io_error.get_or_insert_with(|| anyhow::Error::new(e));
        }
        if (m.episode + 1) % every == 0 {
            let path = out_dir.join(format!("checkpoint_ep{:05}.ckpt", m.episode + 1));
            if let Err(e) = save_checkpoint(&path, policies, config_hash) {
                io_error.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }

    let final_checkpoint = cfg.out_dir.join("checkpoint_final.ckpt");
    save_checkpoint(&final_checkpoint, &output.policies, config_hash)?;

    Ok(TrainReport {
        metrics_path,
        final_checkpoint,
        resolved_config,
        param_checksum: output.policies.checksum(),
        episodes: output.episodes,
        micro_updates: output.micro_updates,
        macro_updates: output.macro_updates,
    })
}

fn rollout_with_outputs(
    cfg: &ExperimentConfig,
    policies: &Policies,
    episodes: usize,
    seed: u64,
    macro_mode: MacroMode,
    micro_mode: MicroMode,
    dump_trajectories: bool,
    summary_name: &str,
    trajectory_name: &str,
) -> Result<EvalReport> {
    ensure_out_dir(cfg)?;
    let mut traj_writer = if dump_trajectories {
        Some(TrajectoryWriter::create(&cfg.out_dir.join(trajectory_name))?)
    } else {
        None
    };
    let mut sink_error: Option<std::io::Error> = None;
    let metrics = {
        let mut sink = |p: &covauv_core::rl::TrajectoryPoint| {
            if let Some(w) = traj_writer.as_mut() {
                if let Err(e) = w.write_point(p) {
                    sink_error.get_or_insert(e);
                }
            }
        };
        rollout_episodes(
            policies,
            &cfg.train.env,
            episodes,
            seed,
            macro_mode,
            micro_mode,
            dump_trajectories.then_some(&mut sink),
        )?
    };
    if let Some(e) = sink_error {
        return Err(e.into());
    }
    let summary = summarize(&metrics);
    let summary_path = cfg.out_dir.join(summary_name);
    write_summary_csv(&summary_path, &summary)?;
    let trajectories = traj_writer.map(|w| w.finish()).transpose()?;
    Ok(EvalReport {
        summary,
        metrics,
        summary_path,
        trajectories,
    })
}

/// Deterministic-policy evaluation of a checkpoint.
pub fn cmd_eval(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
    episodes: usize,
    dump_trajectories: bool,
) -> Result<EvalReport> {
    let policies = load_checkpoint(checkpoint, cfg)?;
    rollout_with_outputs(
        cfg,
        &policies,
        episodes,
        derive_seed(cfg.train.seed, "eval"),
        MacroMode::PolicyDeterministic,
        MicroMode::PolicyDeterministic,
        dump_trajectories,
        "eval_summary.csv",
        "trajectories.jsonl",
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Macro selection uniform over non-empty subsets; micro from the policy.
    RandomG,
    /// Micro velocity uniform in the speed ball; macro from the policy.
    RandomV,
}

/// Random-decision baselines sharing the eval summary schema. Without a
/// checkpoint the policy side runs with freshly initialized networks.
pub fn cmd_baseline(
    cfg: &ExperimentConfig,
    kind: BaselineKind,
    checkpoint: Option<&Path>,
    episodes: usize,
    uniform_power: bool,
    dump_trajectories: bool,
) -> Result<EvalReport> {
    let policies = match checkpoint {
        Some(path) => load_checkpoint(path, cfg)?,
        None => Policies::new(&cfg.train),
    };
    let (macro_mode, micro_mode, name) = match kind {
        BaselineKind::RandomG => (
            MacroMode::RandomNonEmpty,
            MicroMode::PolicyDeterministic,
            "baseline_random_g_summary.csv",
        ),
        BaselineKind::RandomV => (
            MacroMode::PolicyDeterministic,
            MicroMode::RandomVelocity { uniform_power },
            "baseline_random_v_summary.csv",
        ),
    };
    rollout_with_outputs(
        cfg,
        &policies,
        episodes,
        derive_seed(cfg.train.seed, "baseline"),
        macro_mode,
        micro_mode,
        dump_trajectories,
        name,
        "baseline_trajectories.jsonl",
    )
}

/// Covertness sweep: per epsilon either train in place or load a checkpoint
/// from a `{eps}` template, then evaluate deterministically under common
/// evaluation seeds. Emits `sweep.csv` with `(epsilon, mean_eta, mean_kl)`.
pub fn cmd_sweep_epsilon(
    cfg: &ExperimentConfig,
    epsilons: &[f64],
    eval_episodes: usize,
    train_in_place: bool,
    checkpoint_template: Option<&str>,
) -> Result<(Vec<SweepRow>, PathBuf)> {
    if epsilons.is_empty() {
        bail!("epsilon list is empty");
    }
    ensure_out_dir(cfg)?;
    let eval_seed = derive_seed(cfg.train.seed, "sweep-eval");
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut run_cfg = cfg.clone();
        run_cfg
            .apply("env.epsilon", &eps.to_string())
            .map_err(|e| anyhow::anyhow!(e.to_string()))?;
        run_cfg.out_dir = cfg.out_dir.join(format!("eps_{eps}"));
        run_cfg.validate().map_err(|e| anyhow::anyhow!(e.to_string()))?;

        let policies = if train_in_place {
            ensure_out_dir(&run_cfg)?;
            let report = cmd_train(&run_cfg)?;
            load_checkpoint(&report.final_checkpoint, &run_cfg)?
        } else if let Some(template) = checkpoint_template {
            let path = PathBuf::from(template.replace("{eps}", &eps.to_string()));
            load_checkpoint(&path, &run_cfg)?
        } else {
            bail!("sweep needs --train-in-place or --checkpoint-template");
        };

        let metrics = rollout_episodes(
            &policies,
            &run_cfg.train.env,
            eval_episodes,
            eval_seed,
            MacroMode::PolicyDeterministic,
            MicroMode::PolicyDeterministic,
            None,
        )?;
        let summary = summarize(&metrics);
        rows.push(SweepRow {
            epsilon: eps,
            mean_eta: summary.efficiency.0,
            mean_kl: summary.kl_mean.0,
        });
    }
    let path = cfg.out_dir.join("sweep.csv");
    write_sweep_csv(&path, &rows)?;
    Ok((rows, path))
}
