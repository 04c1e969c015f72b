//! Metrics and trajectory persistence.
//!
//! `metrics.csv`: one `#`-prefixed provenance line (seed, workers, config
//! hash), a header row, then one row per episode, flushed as it is written so
//! interrupted runs leave complete lines. `trajectories.jsonl`: one JSON
//! object per selected AUV and micro slot. Summary CSVs share a single column
//! set between `eval` and `baseline`.

use covauv_core::rl::{EpisodeMetrics, RolloutSummary, TrajectoryPoint};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const METRICS_COLUMNS: &str =
    "episode,macro_reward,micro_reward,zeta,eta,t_task,kl_mean,covert_rate";

pub const SUMMARY_COLUMNS: &str = "episodes,zeta_mean,zeta_std,eta_mean,eta_std,t_task_mean,\
t_task_std,kl_mean,kl_std,covert_rate_mean,covert_rate_std,micro_reward_mean,micro_reward_std,\
macro_reward_mean,macro_reward_std";

/// Streaming writer for `metrics.csv`.
pub struct MetricsWriter {
    out: BufWriter<File>,
    pub path: PathBuf,
}

impl MetricsWriter {
    pub fn create(path: &Path, seed: u64, workers: usize, config_hash: u64) -> std::io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(
            out,
            "# covauv metrics v1 seed={seed} workers={workers} config_hash={config_hash:016x}"
        )?;
        writeln!(out, "{METRICS_COLUMNS}")?;
        out.flush()?;
        Ok(MetricsWriter {
            out,
            path: path.to_path_buf(),
        })
    }

    pub fn write_episode(&mut self, m: &EpisodeMetrics) -> std::io::Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{}",
            m.episode,
            m.macro_reward,
            m.micro_reward,
            m.coverage,
            m.efficiency,
            m.t_task,
            m.kl_mean,
            m.covert_rate
        )?;
        self.out.flush()
    }
}

/// Reads episode rows back from a metrics file (used by sweeps and tests).
pub fn read_metrics(path: &Path) -> std::io::Result<Vec<EpisodeMetrics>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("episode") || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            continue;
        }
        let f = |i: usize| cols[i].parse::<f64>().unwrap_or(f64::NAN);
        rows.push(EpisodeMetrics {
            episode: cols[0].parse().unwrap_or(0),
            macro_reward: f(1),
            micro_reward: f(2),
            coverage: f(3),
            efficiency: f(4),
            t_task: f(5),
            kl_mean: f(6),
            covert_rate: f(7),
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct TrajRecord {
    episode: usize,
    t: usize,
    tau: usize,
    auv: usize,
    position: [f64; 3],
    power: f64,
    kl: f64,
}

/// JSON-lines trajectory writer.
pub struct TrajectoryWriter {
    out: BufWriter<File>,
    pub path: PathBuf,
    pub records: usize,
}

impl TrajectoryWriter {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(TrajectoryWriter {
            out: BufWriter::new(File::create(path)?),
            path: path.to_path_buf(),
            records: 0,
        })
    }

    pub fn write_point(&mut self, p: &TrajectoryPoint) -> std::io::Result<()> {
        let rec = TrajRecord {
            episode: p.episode,
            t: p.macro_step,
            tau: p.slot,
            auv: p.auv,
            position: p.position,
            power: p.power_w,
            kl: p.kl,
        };
        serde_json::to_writer(&mut self.out, &rec)?;
        writeln!(self.out)?;
        self.records += 1;
        Ok(())
    }

    pub fn finish(mut self) -> std::io::Result<(PathBuf, usize)> {
        self.out.flush()?;
        Ok((self.path, self.records))
    }
}

/// Writes the shared eval/baseline summary schema.
pub fn write_summary_csv(path: &Path, s: &RolloutSummary) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{SUMMARY_COLUMNS}")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.episodes,
        s.coverage.0,
        s.coverage.1,
        s.efficiency.0,
        s.efficiency.1,
        s.t_task.0,
        s.t_task.1,
        s.kl_mean.0,
        s.kl_mean.1,
        s.covert_rate.0,
        s.covert_rate.1,
        s.micro_reward.0,
        s.micro_reward.1,
        s.macro_reward.0,
        s.macro_reward.1
    )?;
    out.flush()
}

/// One covertness-sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub mean_eta: f64,
    pub mean_kl: f64,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "epsilon,mean_eta,mean_kl")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.epsilon, r.mean_eta, r.mean_kl)?;
    }
    out.flush()
}
