//! Hierarchical PPO/MAPPO trainer.
//!
//! Per episode, per macro step: the central actor samples the team, the
//! selected AUVs roll a micro episode with each actor seeing only its own
//! 11-feature observation while the centralized critic sees the global state
//! (centralized training, decentralized execution). Micro transitions update
//! the AUV networks every `update_micro` samples with minibatched PPO epochs;
//! macro transitions update the central networks every `update_macro`
//! samples. Buffers are cleared after each update.
//!
//! Rollout collection may run on several logical workers. Each worker owns an
//! environment and a per-episode derived RNG, all workers advance one macro
//! step per round in lockstep against a parameter snapshot, and the trainer
//! merges their data in worker order before applying updates. With one worker
//! this reduces exactly to the sequential two-level loop; results are
//! reproducible for a fixed worker count.

use super::buffer::{CriticSample, MacroBuffer, MicroActorSample, MicroBuffer};
use super::features::{scale_global_state, scale_macro_state, scale_micro_obs};
use super::gae::gae;
use super::heads::SquashSpec;
use super::ppo::{
    bernoulli_actor_loss_grad, critic_loss_grad, gaussian_actor_loss_grad, normalize_advantages,
    BernoulliActor, GaussianActor, GaussianActorOpt, NetOpt, PpoConfig, ValueNet,
};
use crate::env::{
    EnvConfig, EnvError, MacroStepRecord, MicroAction, UnderwaterEnv,
};
use crate::seeding::{rng_for, rng_for_indexed};
use crate::Vec3;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("environment error: {0}")]
    Env(#[from] EnvError),
    #[error("invalid training config: {0}")]
    Config(String),
}

/// Full training configuration: environment, PPO hyperparameters, network
/// sizes and run control.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub episodes: usize,
    pub seed: u64,
    /// Logical rollout workers (fixed count is part of the reproducibility
    /// contract and recorded in the metrics header).
    pub workers: usize,
    /// One parameter set for all AUV actors (homogeneous team) or one per AUV.
    pub shared_micro_actor: bool,
    /// One centralized critic or one per AUV.
    pub shared_micro_critic: bool,
    pub hidden_actor: usize,
    pub hidden_critic: usize,
    pub hidden_cauv: usize,
    pub log_std_init: f64,
    /// Checkpoint cadence in episodes (consumed by the front end).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
            episodes: 2000,
            seed: 0,
            workers: 1,
            shared_micro_actor: true,
            shared_micro_critic: true,
            hidden_actor: 384,
            hidden_critic: 512,
            hidden_cauv: 256,
            log_std_init: -0.5,
            checkpoint_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.env.validate()?;
        self.ppo.validate().map_err(TrainError::Config)?;
        if self.episodes == 0 {
            return Err(TrainError::Config("episodes must be positive".into()));
        }
        if self.workers == 0 {
            return Err(TrainError::Config("workers must be positive".into()));
        }
        Ok(())
    }

    /// Micro action squash: power onto `[p_min, p_max]`, each velocity axis
    /// onto `[-v_max/sqrt(3), v_max/sqrt(3)]` so the box sits inside the
    /// speed ball.
    pub fn micro_squash(&self) -> SquashSpec {
        let (po, ps) = SquashSpec::interval(self.env.power_min_w, self.env.power_max_w);
        let vs = self.env.v_max / 3f64.sqrt();
        SquashSpec {
            offsets: vec![po, 0.0, 0.0, 0.0],
            scales: vec![ps, vs, vs, vs],
        }
    }
}

/// All trainable networks.
#[derive(Debug, Clone)]
pub struct Policies {
    pub micro_actors: Vec<GaussianActor>,
    pub micro_critics: Vec<ValueNet>,
    pub macro_actor: BernoulliActor,
    pub macro_critic: ValueNet,
    pub shared_micro_actor: bool,
    pub shared_micro_critic: bool,
}

impl Policies {
    pub fn new(cfg: &TrainConfig) -> Self {
        let mut rng = rng_for(cfg.seed, "net-init");
        let m = cfg.env.n_auvs;
        let obs_len = crate::env::MICRO_OBS_LEN;
        let gstate_len = cfg.env.global_state_len();
        let mstate_len = cfg.env.macro_state_len();
        let n_actors = if cfg.shared_micro_actor { 1 } else { m };
        let n_critics = if cfg.shared_micro_critic { 1 } else { m };
        let micro_actors = (0..n_actors)
            .map(|_| {
                GaussianActor::new(
                    &[obs_len, cfg.hidden_actor, 4],
                    cfg.micro_squash(),
                    cfg.log_std_init,
                    &mut rng,
                )
            })
            .collect();
        let micro_critics = (0..n_critics)
            .map(|_| ValueNet::new(&[gstate_len, cfg.hidden_critic, 1], &mut rng))
            .collect();
        let macro_actor = BernoulliActor::new(&[mstate_len, cfg.hidden_cauv, m], &mut rng);
        let macro_critic = ValueNet::new(&[mstate_len, cfg.hidden_critic, 1], &mut rng);
        Policies {
            micro_actors,
            micro_critics,
            macro_actor,
            macro_critic,
            shared_micro_actor: cfg.shared_micro_actor,
            shared_micro_critic: cfg.shared_micro_critic,
        }
    }

    pub fn actor_index(&self, auv: usize) -> usize {
        if self.shared_micro_actor {
            0
        } else {
            auv
        }
    }

    pub fn critic_index(&self, auv: usize) -> usize {
        if self.shared_micro_critic {
            0
        } else {
            auv
        }
    }

    pub fn n_critics(&self) -> usize {
        self.micro_critics.len()
    }

    /// FNV-1a checksum over all parameter bytes, for determinism checks.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |xs: &[f64]| {
            for x in xs {
                for b in x.to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        };
        for a in &self.micro_actors {
            eat(a.net.params());
            eat(&a.log_std);
        }
        for c in &self.micro_critics {
            eat(c.net.params());
        }
        eat(self.macro_actor.net.params());
        eat(self.macro_critic.net.params());
        h
    }
}

/// Per-episode training metrics (means over the episode's macro steps).
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub macro_reward: f64,
    pub micro_reward: f64,
    pub coverage: f64,
    pub efficiency: f64,
    pub t_task: f64,
    pub kl_mean: f64,
    pub covert_rate: f64,
}

/// Result of a training run.
pub struct TrainOutput {
    pub policies: Policies,
    pub episodes: Vec<EpisodeMetrics>,
    pub micro_updates: usize,
    pub macro_updates: usize,
    pub micro_transitions: usize,
    pub macro_transitions: usize,
}

/// Data produced by one worker macro step.
struct MacroStepData {
    worker: usize,
    episode: usize,
    macro_state: Vec<f64>,
    macro_value: f64,
    selection: Vec<bool>,
    selection_logp: f64,
    slot_states: Vec<Vec<f64>>,
    slot_rewards: Vec<f64>,
    /// Per critic index: values over slots plus the bootstrap value.
    slot_values: Vec<Vec<f64>>,
    bootstrap_values: Vec<f64>,
    entries: Vec<(usize, usize, Vec<f64>, Vec<f64>, f64)>,
    fusion: MacroStepRecord,
}

struct PendingMacro {
    state: Vec<f64>,
    selection: Vec<bool>,
    logp: f64,
    value: f64,
    reward: f64,
}

struct Worker {
    idx: usize,
    env: Option<UnderwaterEnv>,
    episode: usize,
    rng: ChaCha12Rng,
    pending_macro: Vec<PendingMacro>,
    ep_records: Vec<MacroStepRecord>,
    active: bool,
}

impl Worker {
    fn ensure_episode(&mut self, cfg: &TrainConfig) -> Result<(), TrainError> {
        if self.env.is_none() {
            let env_seed = crate::seeding::derive_seed_indexed(cfg.seed, "episode-env", self.episode as u64);
            self.env = Some(UnderwaterEnv::reset(cfg.env.clone(), env_seed)?);
            self.rng = rng_for_indexed(cfg.seed, "policy", self.episode as u64);
            self.pending_macro.clear();
            self.ep_records.clear();
        }
        Ok(())
    }

    /// One macro step against a frozen parameter snapshot.
    fn run_macro_step(
        &mut self,
        cfg: &TrainConfig,
        policies: &Policies,
    ) -> Result<MacroStepData, TrainError> {
        self.ensure_episode(cfg)?;
        let env = self.env.as_mut().expect("episode ensured");
        let n = cfg.env.n_auvs;

        let macro_state = scale_macro_state(&env.macro_observe().features);
        let macro_value = policies.macro_critic.value(&macro_state);
        let (selection, selection_logp, probs) =
            policies.macro_actor.sample(&macro_state, &mut self.rng);
        env.begin_macro(&selection, &probs)?;

        let mut slot_states = Vec::with_capacity(cfg.env.micro_steps);
        let mut slot_rewards = Vec::with_capacity(cfg.env.micro_steps);
        let mut entries = Vec::new();
        let mut obs_all = env.observe_all();

        for slot in 0..cfg.env.micro_steps {
            slot_states.push(scale_global_state(&env.global_state(), n));
            let mut actions: Vec<Option<MicroAction>> = vec![None; n];
            for (m, obs) in obs_all.iter().enumerate() {
                if !env.selection()[m] {
                    continue;
                }
                let scaled = scale_micro_obs(&obs.features());
                let actor = &policies.micro_actors[policies.actor_index(m)];
                let (u, a, logp) = actor.sample(&scaled, &mut self.rng);
                actions[m] = Some(MicroAction {
                    power_w: a[0],
                    velocity: [a[1], a[2], a[3]],
                });
                entries.push((slot, m, scaled, u, logp));
            }
            let rec = env.micro_step(&actions)?;
            slot_rewards.push(rec.reward);
            obs_all = rec.observations;
        }

        let terminal_state = scale_global_state(&env.global_state(), n);
        let fusion = env.finish_macro()?;

        let slot_values: Vec<Vec<f64>> = policies
            .micro_critics
            .iter()
            .map(|c| slot_states.iter().map(|s| c.value(s)).collect())
            .collect();
        let bootstrap_values: Vec<f64> = policies
            .micro_critics
            .iter()
            .map(|c| c.value(&terminal_state))
            .collect();

        Ok(MacroStepData {
            worker: self.idx,
            episode: self.episode,
            macro_state,
            macro_value,
            selection,
            selection_logp,
            slot_states,
            slot_rewards,
            slot_values,
            bootstrap_values,
            entries,
            fusion,
        })
    }
}

/// Runs the full two-level training loop; `on_episode` fires once per
/// finished episode in episode order.
pub fn train_hmappo(
    cfg: &TrainConfig,
    mut on_episode: impl FnMut(&EpisodeMetrics, &Policies),
) -> Result<TrainOutput, TrainError> {
    cfg.validate()?;
    let mut policies = Policies::new(cfg);
    let mut rng_update = rng_for(cfg.seed, "update");

    let mut micro_buffer = MicroBuffer::default();
    let mut macro_buffer = MacroBuffer::default();
    let mut micro_opts: Vec<GaussianActorOpt> = policies
        .micro_actors
        .iter()
        .map(|a| GaussianActorOpt::new(cfg.ppo.lr_actor, a))
        .collect();
    let mut micro_critic_opts: Vec<NetOpt> = policies
        .micro_critics
        .iter()
        .map(|c| NetOpt::new(cfg.ppo.lr_critic, &c.net))
        .collect();
    let mut macro_actor_opt = NetOpt::new(cfg.ppo.lr_actor, &policies.macro_actor.net);
    let mut macro_critic_opt = NetOpt::new(cfg.ppo.lr_critic, &policies.macro_critic.net);

    let n_workers = cfg.workers.min(cfg.episodes);
    let mut workers: Vec<Worker> = (0..n_workers)
        .map(|w| Worker {
            idx: w,
            env: None,
            episode: w,
            rng: rng_for_indexed(cfg.seed, "policy", w as u64),
            pending_macro: Vec::new(),
            ep_records: Vec::new(),
            active: w < cfg.episodes,
        })
        .collect();
    let mut next_episode = n_workers;

    let mut episodes_out: Vec<EpisodeMetrics> = Vec::with_capacity(cfg.episodes);
    let mut micro_updates = 0usize;
    let mut macro_updates = 0usize;
    let mut micro_transitions = 0usize;
    let mut macro_transitions = 0usize;

    while workers.iter().any(|w| w.active) {
        // collection round: one macro step per active worker, frozen params
        let round: Vec<MacroStepData> = if n_workers == 1 {
            let w = &mut workers[0];
            vec![w.run_macro_step(cfg, &policies)?]
        } else {
            let policies_ref = &policies;
            let cfg_ref = &cfg;
            std::thread::scope(|scope| {
                let handles: Vec<_> = workers
                    .iter_mut()
                    .filter(|w| w.active)
                    .map(|w| scope.spawn(move || w.run_macro_step(cfg_ref, policies_ref)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker thread panicked"))
                    .collect::<Result<Vec<_>, _>>()
            })?
        };

        for data in round {
            // micro segment: GAE per critic stream, then flatten
            let n_slots = data.slot_rewards.len();
            let dones = vec![false; n_slots];
            let mut adv_per_critic = Vec::with_capacity(policies.n_critics());
            for c in 0..policies.n_critics() {
                let (adv, ret) = gae(
                    &data.slot_rewards,
                    &data.slot_values[c],
                    data.bootstrap_values[c],
                    &dones,
                    cfg.ppo.gamma,
                    cfg.ppo.gae_lambda,
                )
                .expect("aligned segment");
                for (slot, state) in data.slot_states.iter().enumerate() {
                    micro_buffer.critic_samples.push(CriticSample {
                        critic_idx: c,
                        state: state.clone(),
                        ret: ret[slot],
                    });
                }
                adv_per_critic.push(adv);
            }
            for (slot, auv, obs, u, logp) in data.entries {
                micro_buffer.actor_samples.push(MicroActorSample {
                    actor_idx: policies.actor_index(auv),
                    obs,
                    u,
                    logp_old: logp,
                    advantage: adv_per_critic[policies.critic_index(auv)][slot],
                });
                micro_transitions += 1;
            }

            // macro transition joins the worker's pending episode segment
            let worker = &mut workers[data.worker];
            worker.pending_macro.push(PendingMacro {
                state: data.macro_state,
                selection: data.selection,
                logp: data.selection_logp,
                value: data.macro_value,
                reward: data.fusion.macro_reward,
            });
            worker.ep_records.push(data.fusion.clone());

            if data.fusion.done {
                let seg = std::mem::take(&mut worker.pending_macro);
                let rewards: Vec<f64> = seg.iter().map(|p| p.reward).collect();
                let values: Vec<f64> = seg.iter().map(|p| p.value).collect();
                let mut seg_dones = vec![false; seg.len()];
                *seg_dones.last_mut().expect("nonempty segment") = true;
                let (adv, ret) = gae(
                    &rewards,
                    &values,
                    0.0,
                    &seg_dones,
                    cfg.ppo.gamma,
                    cfg.ppo.gae_lambda,
                )
                .expect("aligned segment");
                for (i, p) in seg.into_iter().enumerate() {
                    macro_buffer.samples.push(super::buffer::MacroSample {
                        state: p.state,
                        selection: p.selection,
                        logp_old: p.logp,
                        advantage: adv[i],
                        ret: ret[i],
                    });
                    macro_transitions += 1;
                }

                let metrics = episode_metrics(data.episode, &worker.ep_records);
                worker.ep_records.clear();
                worker.env = None;
                if next_episode < cfg.episodes {
                    worker.episode = next_episode;
                    next_episode += 1;
                } else {
                    worker.active = false;
                }
                on_episode(&metrics, &policies);
                episodes_out.push(metrics);
            }

            // update checks after every merged macro step
            if micro_buffer.len() >= cfg.ppo.update_micro {
                update_micro_networks(
                    &mut policies,
                    &micro_buffer,
                    &mut micro_opts,
                    &mut micro_critic_opts,
                    &cfg.ppo,
                    &mut rng_update,
                );
                micro_buffer.clear();
                micro_updates += 1;
            }
            if macro_buffer.len() >= cfg.ppo.update_macro {
                update_macro_networks(
                    &mut policies,
                    &macro_buffer,
                    &mut macro_actor_opt,
                    &mut macro_critic_opt,
                    &cfg.ppo,
                    &mut rng_update,
                );
                macro_buffer.clear();
                macro_updates += 1;
            }
        }
    }

    Ok(TrainOutput {
        policies,
        episodes: episodes_out,
        micro_updates,
        macro_updates,
        micro_transitions,
        macro_transitions,
    })
}

fn episode_metrics(episode: usize, records: &[MacroStepRecord]) -> EpisodeMetrics {
    let n = records.len().max(1) as f64;
    EpisodeMetrics {
        episode,
        macro_reward: records.iter().map(|r| r.macro_reward).sum::<f64>() / n,
        micro_reward: records.iter().map(|r| r.mean_micro_reward).sum::<f64>() / n,
        coverage: records.iter().map(|r| r.coverage).sum::<f64>() / n,
        efficiency: records.iter().map(|r| r.efficiency).sum::<f64>() / n,
        t_task: records.iter().map(|r| r.t_task).sum::<f64>() / n,
        kl_mean: records.iter().map(|r| r.mean_kl).sum::<f64>() / n,
        covert_rate: records.iter().map(|r| r.covert_rate).sum::<f64>() / n,
    }
}

fn update_micro_networks(
    policies: &mut Policies,
    buffer: &MicroBuffer,
    actor_opts: &mut [GaussianActorOpt],
    critic_opts: &mut [NetOpt],
    ppo: &PpoConfig,
    rng: &mut ChaCha12Rng,
) {
    let n_actor = buffer.actor_samples.len();
    let n_critic = buffer.critic_samples.len();
    for _ in 0..ppo.epochs {
        let mut idx: Vec<usize> = (0..n_actor).collect();
        idx.shuffle(rng);
        for chunk in idx.chunks(ppo.minibatch_micro) {
            let mut adv: Vec<f64> = chunk
                .iter()
                .map(|&i| buffer.actor_samples[i].advantage)
                .collect();
            normalize_advantages(&mut adv, ppo.adv_norm_eps);
            for actor_idx in 0..policies.micro_actors.len() {
                let mut obs = Vec::new();
                let mut u = Vec::new();
                let mut logp = Vec::new();
                let mut a = Vec::new();
                for (k, &i) in chunk.iter().enumerate() {
                    let s = &buffer.actor_samples[i];
                    if s.actor_idx == actor_idx {
                        obs.push(s.obs.clone());
                        u.push(s.u.clone());
                        logp.push(s.logp_old);
                        a.push(adv[k]);
                    }
                }
                if obs.is_empty() {
                    continue;
                }
                let (_, d_net, d_ls) = gaussian_actor_loss_grad(
                    &policies.micro_actors[actor_idx],
                    &obs,
                    &u,
                    &logp,
                    &a,
                    ppo.clip,
                    ppo.entropy_coeff,
                );
                actor_opts[actor_idx].step(
                    &mut policies.micro_actors[actor_idx],
                    d_net,
                    d_ls,
                    ppo.grad_clip,
                );
            }
        }

        let mut cidx: Vec<usize> = (0..n_critic).collect();
        cidx.shuffle(rng);
        for chunk in cidx.chunks(ppo.minibatch_micro) {
            for critic_idx in 0..policies.micro_critics.len() {
                let mut states = Vec::new();
                let mut rets = Vec::new();
                for &i in chunk {
                    let s = &buffer.critic_samples[i];
                    if s.critic_idx == critic_idx {
                        states.push(s.state.clone());
                        rets.push(s.ret);
                    }
                }
                if states.is_empty() {
                    continue;
                }
                let (_, d_net) =
                    critic_loss_grad(&policies.micro_critics[critic_idx], &states, &rets);
                critic_opts[critic_idx].step(
                    &mut policies.micro_critics[critic_idx].net,
                    d_net,
                    ppo.grad_clip,
                );
            }
        }
    }
}

fn update_macro_networks(
    policies: &mut Policies,
    buffer: &MacroBuffer,
    actor_opt: &mut NetOpt,
    critic_opt: &mut NetOpt,
    ppo: &PpoConfig,
    rng: &mut ChaCha12Rng,
) {
    let n = buffer.samples.len();
    for _ in 0..ppo.epochs {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        for chunk in idx.chunks(ppo.minibatch_macro) {
            let mut adv: Vec<f64> = chunk
                .iter()
                .map(|&i| buffer.samples[i].advantage)
                .collect();
            normalize_advantages(&mut adv, ppo.adv_norm_eps);
            let states: Vec<Vec<f64>> = chunk
                .iter()
                .map(|&i| buffer.samples[i].state.clone())
                .collect();
            let selections: Vec<Vec<bool>> = chunk
                .iter()
                .map(|&i| buffer.samples[i].selection.clone())
                .collect();
            let logp: Vec<f64> = chunk.iter().map(|&i| buffer.samples[i].logp_old).collect();
            let (_, d_net) = bernoulli_actor_loss_grad(
                &policies.macro_actor,
                &states,
                &selections,
                &logp,
                &adv,
                ppo.clip,
                ppo.entropy_coeff,
            );
            actor_opt.step(&mut policies.macro_actor.net, d_net, ppo.grad_clip);

            let rets: Vec<f64> = chunk.iter().map(|&i| buffer.samples[i].ret).collect();
            let (_, d_c) = critic_loss_grad(&policies.macro_critic, &states, &rets);
            critic_opt.step(&mut policies.macro_critic.net, d_c, ppo.grad_clip);
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation and baseline rollouts
// ---------------------------------------------------------------------------

/// Macro-level policy used during rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacroMode {
    PolicyStochastic,
    PolicyDeterministic,
    /// Uniform over non-empty subsets of the team.
    RandomNonEmpty,
}

/// Micro-level policy used during rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MicroMode {
    PolicyStochastic,
    PolicyDeterministic,
    /// Velocity uniform in the speed ball; power from the policy mean, or
    /// uniform in the power interval when `uniform_power` is set.
    RandomVelocity { uniform_power: bool },
}

/// One trajectory sample (selected AUV in one slot).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub episode: usize,
    pub macro_step: usize,
    pub slot: usize,
    pub auv: usize,
    pub position: Vec3,
    pub power_w: f64,
    pub kl: f64,
}

/// Rolls out `episodes` episodes without learning and reports per-episode
/// metrics. Deterministic given the seed (worker count does not matter here).
pub fn rollout_episodes(
    policies: &Policies,
    env_cfg: &EnvConfig,
    episodes: usize,
    seed: u64,
    macro_mode: MacroMode,
    micro_mode: MicroMode,
    mut on_point: Option<&mut dyn FnMut(&TrajectoryPoint)>,
) -> Result<Vec<EpisodeMetrics>, TrainError> {
    env_cfg.validate()?;
    let mut out = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let env_seed = crate::seeding::derive_seed_indexed(seed, "rollout-env", episode as u64);
        let mut env = UnderwaterEnv::reset(env_cfg.clone(), env_seed)?;
        let mut rng = rng_for_indexed(seed, "rollout-policy", episode as u64);
        let mut records = Vec::with_capacity(env_cfg.macro_steps);
        for macro_step in 0..env_cfg.macro_steps {
            let macro_state = scale_macro_state(&env.macro_observe().features);
            let (selection, probs) = match macro_mode {
                MacroMode::PolicyStochastic => {
                    let (g, _, p) = policies.macro_actor.sample(&macro_state, &mut rng);
                    (g, p)
                }
                MacroMode::PolicyDeterministic => policies.macro_actor.deterministic(&macro_state),
                MacroMode::RandomNonEmpty => {
                    let m = env_cfg.n_auvs;
                    let mask: u64 = rng.random_range(1..(1u64 << m));
                    let g: Vec<bool> = (0..m).map(|i| mask & (1 << i) != 0).collect();
                    let p = vec![0.5; m];
                    (g, p)
                }
            };
            env.begin_macro(&selection, &probs)?;
            let mut obs_all = env.observe_all();
            for slot in 0..env_cfg.micro_steps {
                let mut actions: Vec<Option<MicroAction>> = vec![None; env_cfg.n_auvs];
                for (m, obs) in obs_all.iter().enumerate() {
                    if !env.selection()[m] {
                        continue;
                    }
                    let scaled = scale_micro_obs(&obs.features());
                    let actor = &policies.micro_actors[policies.actor_index(m)];
                    let a = match micro_mode {
                        MicroMode::PolicyStochastic => actor.sample(&scaled, &mut rng).1,
                        MicroMode::PolicyDeterministic => actor.mean_action(&scaled),
                        MicroMode::RandomVelocity { uniform_power } => {
                            let power = if uniform_power {
                                rng.random_range(env_cfg.power_min_w..=env_cfg.power_max_w)
                            } else {
                                actor.mean_action(&scaled)[0]
                            };
                            let dir = random_unit_vector(&mut rng);
                            let speed = env_cfg.v_max * rng.random::<f64>().cbrt();
                            vec![power, dir[0] * speed, dir[1] * speed, dir[2] * speed]
                        }
                    };
                    actions[m] = Some(MicroAction {
                        power_w: a[0],
                        velocity: [a[1], a[2], a[3]],
                    });
                }
                let rec = env.micro_step(&actions)?;
                if let Some(sink) = on_point.as_mut() {
                    for m in 0..env_cfg.n_auvs {
                        if let Some(exec) = &rec.executed[m] {
                            sink(&TrajectoryPoint {
                                episode,
                                macro_step,
                                slot,
                                auv: m,
                                position: rec.positions[m],
                                power_w: exec.power_w,
                                kl: rec.kl,
                            });
                        }
                    }
                }
                obs_all = rec.observations;
            }
            records.push(env.finish_macro()?);
        }
        out.push(episode_metrics(episode, &records));
    }
    Ok(out)
}

fn random_unit_vector(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = [
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
        ];
        let n = crate::norm3(v);
        if n > 1e-12 {
            return crate::scale3(v, 1.0 / n);
        }
    }
}

/// Mean and standard deviation of each metric across episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSummary {
    pub episodes: usize,
    pub coverage: (f64, f64),
    pub efficiency: (f64, f64),
    pub t_task: (f64, f64),
    pub kl_mean: (f64, f64),
    pub covert_rate: (f64, f64),
    pub micro_reward: (f64, f64),
    pub macro_reward: (f64, f64),
}

pub fn summarize(metrics: &[EpisodeMetrics]) -> RolloutSummary {
    let stat = |f: &dyn Fn(&EpisodeMetrics) -> f64| -> (f64, f64) {
        let n = metrics.len().max(1) as f64;
        let mean = metrics.iter().map(|m| f(m)).sum::<f64>() / n;
        let var = metrics.iter().map(|m| (f(m) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    RolloutSummary {
        episodes: metrics.len(),
        coverage: stat(&|m| m.coverage),
        efficiency: stat(&|m| m.efficiency),
        t_task: stat(&|m| m.t_task),
        kl_mean: stat(&|m| m.kl_mean),
        covert_rate: stat(&|m| m.covert_rate),
        micro_reward: stat(&|m| m.micro_reward),
        macro_reward: stat(&|m| m.macro_reward),
    }
}
