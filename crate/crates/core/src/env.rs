//! Two-timescale decision environment.
//!
//! A macro step is one task: the central AUV picks a team, the environment
//! places sub-targets, then a fixed budget of micro slots runs in which each
//! selected AUV steers and picks its transmit power. Fusion closes the task
//! with the delay/coverage/efficiency accounting and the macro reward.
//!
//! The environment is deterministic given `(seed, config, action sequence)`;
//! all projection of actions onto the feasible set (power interval, speed
//! ball, per-slot velocity change) happens here so that executed actions can
//! never violate the constraints.

use crate::acoustics::{self, ChannelParams};
use crate::covertness;
use crate::ocean::{CurrentField, OceanParams};
use crate::seeding;
use crate::tasking::{self, DelayConfig, PhaseDelays, PhaseInputs, TaskSpec};
use crate::vehicle::{self, ArenaBox, AuvState, EnergyParams};
use crate::{add3, clamp_norm3, dist3, norm3, scale3, sub3, Vec3};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Number of features in a micro observation (fixed persistence contract).
pub const MICRO_OBS_LEN: usize = 11;

/// Version tag of the global-state layout; bump when the layout changes.
pub const GLOBAL_STATE_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("lifecycle violation: {0}")]
    Lifecycle(&'static str),
    #[error("AUV {0} is not selected but received an action")]
    ActionForUnselected(usize),
    #[error("AUV {0} is selected but received no action")]
    MissingAction(usize),
    #[error("vector length {got}, expected {expected}")]
    SelectionLength { got: usize, expected: usize },
}

/// Reward weights for both decision levels.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardWeights {
    /// Macro: coverage weight xi_1.
    pub macro_coverage: f64,
    /// Macro: task-time weight xi_2 (negative so delay is penalized).
    pub macro_delay: f64,
    /// Macro: mean-micro-reward weight xi_3.
    pub macro_micro: f64,
    /// Micro: covertness weight phi_1.
    pub micro_covert: f64,
    /// Micro: arrival-bonus weight phi_2.
    pub micro_task: f64,
    /// Micro: guidance weight phi_3.
    pub micro_guidance: f64,
    /// Micro: energy-deficit weight phi_4 (negative: penalty).
    pub micro_energy: f64,
    /// One-time arrival bonus.
    pub task_bonus: f64,
    /// Gain on positive progress toward the sub-target.
    pub progress_gain: f64,
    /// Gain on retreat from the sub-target.
    pub retreat_gain: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            macro_coverage: 10.0,
            macro_delay: -0.01,
            macro_micro: 1.0,
            micro_covert: 1.0,
            micro_task: 1.0,
            micro_guidance: 1.0,
            micro_energy: -1.0,
            task_bonus: 100.0,
            progress_gain: 1.5,
            retreat_gain: 1.5,
        }
    }
}

/// Full environment configuration. Defaults follow the reference system
/// parameters (6 AUVs, 200x200x100 m arena, 2 s slots, eps = 0.05, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub arena: ArenaBox,
    /// Number of worker AUVs M.
    pub n_auvs: usize,
    /// Macro tasks per episode T.
    pub macro_steps: usize,
    /// Micro slots per macro task.
    pub micro_steps: usize,
    pub cauv_position: Vec3,
    pub eavesdropper_position: Vec3,
    /// Covertness parameter in (0, 1].
    pub epsilon: f64,
    pub power_min_w: f64,
    pub power_max_w: f64,
    /// Speed limit (m/s).
    pub v_max: f64,
    /// Per-slot velocity change limit (m/s).
    pub dv_max: f64,
    /// Initial energy drawn uniformly from this range (J).
    pub energy_init_range: (f64, f64),
    /// Computing ability C_m (uniform across the team).
    pub compute_c: f64,
    pub base_radius: f64,
    pub radius_mu: f64,
    pub compute_ref: f64,
    /// Task rectangle extent along x (m).
    pub region_l: f64,
    /// Task rectangle extent along y (m).
    pub region_w: f64,
    pub instruction_bits: f64,
    pub sample_bits_per_m2: f64,
    pub sonar_beam_theta: f64,
    /// Depth range for task rectangle centers (z-up, negative underwater).
    pub task_depth_range: (f64, f64),
    pub placement_max_attempts: usize,
    /// Keep the printed `v_s / d` propagation-delay form.
    pub paper_literal_delays: bool,
    /// Add the current to the displacement (sensitivity studies only).
    pub drift_displacement: bool,
    pub channel: ChannelParams,
    pub ocean: OceanParams,
    pub energy: EnergyParams,
    pub weights: RewardWeights,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            // 200 x 200 x 100 m water body with the origin at the surface
            // corner where the central AUV holds station
            arena: ArenaBox {
                min: [0.0, 0.0, -100.0],
                max: [200.0, 200.0, 0.0],
            },
            n_auvs: 6,
            macro_steps: 10,
            micro_steps: 100,
            cauv_position: [0.0, 0.0, -10.0],
            eavesdropper_position: [75.0, 75.0, 5.0],
            epsilon: 0.05,
            power_min_w: 0.0,
            power_max_w: 2.0,
            v_max: 5.0,
            dv_max: 1.0,
            energy_init_range: (10_000.0, 20_000.0),
            compute_c: 5.0,
            base_radius: 5.0,
            radius_mu: 10.0,
            compute_ref: 10.0,
            region_l: 30.0,
            region_w: 30.0,
            instruction_bits: 1e6,
            sample_bits_per_m2: 1e3,
            sonar_beam_theta: std::f64::consts::FRAC_PI_3,
            // survey work happens in the upper water column, within acoustic
            // reach of the surface eavesdropper
            task_depth_range: (-30.0, -10.0),
            placement_max_attempts: 256,
            paper_literal_delays: false,
            drift_displacement: false,
            channel: ChannelParams::default(),
            ocean: OceanParams::default(),
            energy: EnergyParams::default(),
            weights: RewardWeights::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let fail = |msg: String| Err(EnvError::Config(msg));
        if self.n_auvs == 0 {
            return fail("n_auvs must be positive".into());
        }
        if self.macro_steps == 0 || self.micro_steps == 0 {
            return fail("macro_steps and micro_steps must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return fail(format!("epsilon {} outside (0, 1]", self.epsilon));
        }
        if self.power_min_w < 0.0 || self.power_max_w < self.power_min_w {
            return fail("power bounds must satisfy 0 <= p_min <= p_max".into());
        }
        if self.v_max <= 0.0 || self.dv_max <= 0.0 {
            return fail("v_max and dv_max must be positive".into());
        }
        if self.energy_init_range.0 > self.energy_init_range.1 {
            return fail("energy_init_range must be ordered".into());
        }
        if self.region_l <= 0.0 || self.region_w <= 0.0 {
            return fail("task rectangle must have positive extent".into());
        }
        if self.region_l > self.arena.max[0] - self.arena.min[0]
            || self.region_w > self.arena.max[1] - self.arena.min[1]
        {
            return fail("task rectangle does not fit in the arena".into());
        }
        for i in 0..3 {
            if self.arena.min[i] >= self.arena.max[i] {
                return fail("arena box is degenerate".into());
            }
        }
        self.channel
            .validate()
            .map_err(|e| EnvError::Config(e.to_string()))?;
        Ok(())
    }

    /// Detection radius shared by the (homogeneous) team.
    pub fn detection_radius(&self) -> f64 {
        tasking::detection_radius(
            self.compute_c,
            self.base_radius,
            self.radius_mu,
            self.compute_ref,
        )
    }

    /// Width of the macro state vector.
    pub fn macro_state_len(&self) -> usize {
        4 * self.n_auvs
    }

    /// Width of the centralized-critic global state vector.
    pub fn global_state_len(&self) -> usize {
        9 * self.n_auvs + 7
    }
}

/// Flattened macro state: `[x, y, z, E]` per AUV in fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub features: Vec<f64>,
}

/// Local observation of one AUV (11 features, fixed order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroObservation {
    pub d_eavesdropper: f64,
    pub d_cauv: f64,
    pub d_subtarget: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub selected: bool,
    pub energy: f64,
}

impl MicroObservation {
    /// Feature order: distances, position, velocity, selection flag, energy.
    pub fn features(&self) -> [f64; MICRO_OBS_LEN] {
        [
            self.d_eavesdropper,
            self.d_cauv,
            self.d_subtarget,
            self.position[0],
            self.position[1],
            self.position[2],
            self.velocity[0],
            self.velocity[1],
            self.velocity[2],
            if self.selected { 1.0 } else { 0.0 },
            self.energy,
        ]
    }
}

/// Micro action before projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroAction {
    pub power_w: f64,
    pub velocity: Vec3,
}

/// Unweighted micro reward components of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardComponents {
    /// +1 covert, -1 otherwise (system-wide).
    pub covert: f64,
    /// Sum of one-time arrival bonuses fired this slot.
    pub task: f64,
    /// Sum of signed progress terms.
    pub guidance: f64,
    /// Total energy deficit sum(relu(-E)).
    pub energy_deficit: f64,
}

/// Everything observable after one micro slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroStepRecord {
    pub reward: f64,
    pub components: RewardComponents,
    pub kl: f64,
    pub covert_ok: bool,
    /// Executed (projected) actions, aligned with AUV indices.
    pub executed: Vec<Option<MicroAction>>,
    /// Post-move positions.
    pub positions: Vec<Vec3>,
    /// AUVs whose first arrival happened this slot.
    pub arrivals: Vec<bool>,
    pub observations: Vec<MicroObservation>,
    /// True when the micro budget is exhausted.
    pub done: bool,
}

/// Summary of a completed macro step.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroStepRecord {
    pub coverage: f64,
    pub t_task: f64,
    pub efficiency: f64,
    pub macro_reward: f64,
    pub mean_micro_reward: f64,
    pub mean_kl: f64,
    /// Fraction of slots satisfying the covertness constraint.
    pub covert_rate: f64,
    pub remaining_energy: Vec<f64>,
    pub selection: Vec<bool>,
    /// All-zero selection was repaired to the highest-score AUV.
    pub repaired: bool,
    pub placement_best_effort: bool,
    pub arrived: Vec<bool>,
    pub delays: Vec<Option<PhaseDelays>>,
    /// Episode finished (all macro tasks done).
    pub done: bool,
}

enum Phase {
    Idle,
    Micro,
}

/// The simulator.
pub struct UnderwaterEnv {
    cfg: EnvConfig,
    auvs: Vec<AuvState>,
    field: CurrentField,
    tasks: Vec<TaskSpec>,
    task_idx: usize,
    phase: Phase,
    episode_done: bool,
    rng_placement: ChaCha12Rng,
    // per-macro-step state
    selection: Vec<bool>,
    repaired: bool,
    placement_best_effort: bool,
    subtargets: Vec<Option<Vec3>>,
    micro_slot: usize,
    arrival_slot: Vec<Option<usize>>,
    dist_to_sub_prev: Vec<f64>,
    begin_dist_cauv: Vec<f64>,
    first_slot_rate: Vec<f64>,
    slot_rewards: Vec<f64>,
    slot_kls: Vec<f64>,
    slot_covert: Vec<bool>,
}

impl UnderwaterEnv {
    /// Builds a fresh episode: AUVs placed uniformly in the arena, energies
    /// drawn from the configured range, current field sampled, task queue of
    /// `macro_steps` rectangles generated. Same seed, same episode.
    pub fn reset(cfg: EnvConfig, seed: u64) -> Result<Self, EnvError> {
        cfg.validate()?;
        let mut rng_init = seeding::rng_for(seed, "env-init");
        let radius = cfg.detection_radius();
        let auvs: Vec<AuvState> = (0..cfg.n_auvs)
            .map(|_| {
                let position = [
                    rng_init.random_range(cfg.arena.min[0]..=cfg.arena.max[0]),
                    rng_init.random_range(cfg.arena.min[1]..=cfg.arena.max[1]),
                    rng_init.random_range(cfg.arena.min[2]..=cfg.arena.max[2]),
                ];
                let energy =
                    rng_init.random_range(cfg.energy_init_range.0..=cfg.energy_init_range.1);
                AuvState {
                    position,
                    thrust_velocity: [0.0; 3],
                    energy,
                    detection_radius: radius,
                    compute_c: cfg.compute_c,
                    selected: false,
                    transmit_power: 0.0,
                }
            })
            .collect();
        let field = CurrentField::sample(&cfg.ocean, cfg.arena.min, cfg.arena.max, &mut rng_init);
        let tasks: Vec<TaskSpec> = (0..cfg.macro_steps)
            .map(|_| {
                let half_l = cfg.region_l / 2.0;
                let half_w = cfg.region_w / 2.0;
                TaskSpec {
                    center: [
                        rng_init
                            .random_range(cfg.arena.min[0] + half_l..=cfg.arena.max[0] - half_l),
                        rng_init
                            .random_range(cfg.arena.min[1] + half_w..=cfg.arena.max[1] - half_w),
                        rng_init.random_range(cfg.task_depth_range.0..=cfg.task_depth_range.1),
                    ],
                    length_l: cfg.region_l,
                    width_w: cfg.region_w,
                    instruction_bits: cfg.instruction_bits,
                    sample_bits_per_m2: cfg.sample_bits_per_m2,
                    sonar_beam_theta: cfg.sonar_beam_theta,
                }
            })
            .collect();
        let n = cfg.n_auvs;
        Ok(UnderwaterEnv {
            rng_placement: seeding::rng_for(seed, "env-placement"),
            cfg,
            auvs,
            field,
            tasks,
            task_idx: 0,
            phase: Phase::Idle,
            episode_done: false,
            selection: vec![false; n],
            repaired: false,
            placement_best_effort: false,
            subtargets: vec![None; n],
            micro_slot: 0,
            arrival_slot: vec![None; n],
            dist_to_sub_prev: vec![0.0; n],
            begin_dist_cauv: vec![0.0; n],
            first_slot_rate: vec![0.0; n],
            slot_rewards: Vec::new(),
            slot_kls: Vec::new(),
            slot_covert: Vec::new(),
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn auvs(&self) -> &[AuvState] {
        &self.auvs
    }

    pub fn current_task(&self) -> &TaskSpec {
        &self.tasks[self.task_idx.min(self.tasks.len() - 1)]
    }

    pub fn episode_done(&self) -> bool {
        self.episode_done
    }

    pub fn micro_slots_executed(&self) -> usize {
        self.micro_slot
    }

    pub fn field(&self) -> &CurrentField {
        &self.field
    }

    /// Flattened `[position, energy]` per AUV.
    pub fn macro_observe(&self) -> MacroState {
        let mut features = Vec::with_capacity(self.cfg.macro_state_len());
        for auv in &self.auvs {
            features.extend_from_slice(&auv.position);
            features.push(auv.energy);
        }
        MacroState { features }
    }

    /// Local observation of AUV `m`. Requires an active micro episode.
    pub fn micro_observe(&self, m: usize) -> Result<MicroObservation, EnvError> {
        if !matches!(self.phase, Phase::Micro) {
            return Err(EnvError::Lifecycle("micro_observe outside a micro episode"));
        }
        Ok(self.observation_of(m))
    }

    fn observation_of(&self, m: usize) -> MicroObservation {
        let auv = &self.auvs[m];
        let d_subtarget = match self.subtargets[m] {
            Some(s) => dist3(auv.position, s),
            None => dist3(auv.position, self.current_task().center),
        };
        MicroObservation {
            d_eavesdropper: dist3(auv.position, self.cfg.eavesdropper_position),
            d_cauv: dist3(auv.position, self.cfg.cauv_position),
            d_subtarget,
            position: auv.position,
            velocity: auv.thrust_velocity,
            selected: auv.selected,
            energy: auv.energy,
        }
    }

    pub fn observe_all(&self) -> Vec<MicroObservation> {
        (0..self.cfg.n_auvs)
            .map(|m| self.observation_of(m))
            .collect()
    }

    /// Centralized-critic input: per AUV `[pos, vel, E, G, d_sub]`, then the
    /// task rectangle `[center, l, w]`, then the eavesdropper distance summary
    /// `[min, mean]`. Layout version: [`GLOBAL_STATE_VERSION`].
    pub fn global_state(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.cfg.global_state_len());
        let mut d_min = f64::INFINITY;
        let mut d_sum = 0.0;
        for (m, auv) in self.auvs.iter().enumerate() {
            s.extend_from_slice(&auv.position);
            s.extend_from_slice(&auv.thrust_velocity);
            s.push(auv.energy);
            s.push(if auv.selected { 1.0 } else { 0.0 });
            let d_sub = match self.subtargets[m] {
                Some(t) => dist3(auv.position, t),
                None => dist3(auv.position, self.current_task().center),
            };
            s.push(d_sub);
            let d_e = dist3(auv.position, self.cfg.eavesdropper_position);
            d_min = d_min.min(d_e);
            d_sum += d_e;
        }
        let task = self.current_task();
        s.extend_from_slice(&task.center);
        s.push(task.length_l);
        s.push(task.width_w);
        s.push(d_min);
        s.push(d_sum / self.cfg.n_auvs as f64);
        s
    }

    /// Starts a macro step: applies (and if necessary repairs) the selection
    /// and assigns sub-targets. `scores` are the per-AUV selection
    /// probabilities used to repair an all-zero selection.
    pub fn begin_macro(&mut self, selection: &[bool], scores: &[f64]) -> Result<(), EnvError> {
        if self.episode_done {
            return Err(EnvError::Lifecycle("episode is finished"));
        }
        if !matches!(self.phase, Phase::Idle) {
            return Err(EnvError::Lifecycle("previous macro step still running"));
        }
        if selection.len() != self.cfg.n_auvs {
            return Err(EnvError::SelectionLength {
                got: selection.len(),
                expected: self.cfg.n_auvs,
            });
        }
        let mut sel = selection.to_vec();
        self.repaired = false;
        if sel.iter().all(|&g| !g) {
            let best = (0..sel.len())
                .max_by(|&a, &b| {
                    let sa = scores.get(a).copied().unwrap_or(0.0);
                    let sb = scores.get(b).copied().unwrap_or(0.0);
                    sa.partial_cmp(&sb).expect("finite scores")
                })
                .expect("nonempty team");
            sel[best] = true;
            self.repaired = true;
        }

        for (m, auv) in self.auvs.iter_mut().enumerate() {
            auv.selected = sel[m];
            if !sel[m] {
                auv.thrust_velocity = [0.0; 3];
                auv.transmit_power = 0.0;
            }
        }

        // greedy placement over the selected radii, mapped back to arena frame
        let task = self.tasks[self.task_idx].clone();
        let selected_idx: Vec<usize> = (0..sel.len()).filter(|&m| sel[m]).collect();
        let radii: Vec<f64> = selected_idx
            .iter()
            .map(|&m| self.auvs[m].detection_radius)
            .collect();
        let placement = tasking::assign_subtargets(
            &radii,
            task.length_l,
            task.width_w,
            &mut self.rng_placement,
            self.cfg.placement_max_attempts,
        );
        self.placement_best_effort = placement.best_effort;
        self.subtargets = vec![None; self.cfg.n_auvs];
        for (k, &m) in selected_idx.iter().enumerate() {
            self.subtargets[m] = Some(task.local_to_arena(placement.centers[k]));
        }

        for m in 0..self.cfg.n_auvs {
            self.dist_to_sub_prev[m] = match self.subtargets[m] {
                Some(t) => dist3(self.auvs[m].position, t),
                None => 0.0,
            };
            self.begin_dist_cauv[m] = dist3(self.auvs[m].position, self.cfg.cauv_position);
        }
        self.selection = sel;
        self.micro_slot = 0;
        self.arrival_slot = vec![None; self.cfg.n_auvs];
        self.first_slot_rate = vec![0.0; self.cfg.n_auvs];
        self.slot_rewards.clear();
        self.slot_kls.clear();
        self.slot_covert.clear();
        self.phase = Phase::Micro;
        Ok(())
    }

    pub fn selection(&self) -> &[bool] {
        &self.selection
    }

    pub fn was_repaired(&self) -> bool {
        self.repaired
    }

    pub fn subtarget(&self, m: usize) -> Option<Vec3> {
        self.subtargets[m]
    }

    /// Projects a desired action onto the feasible set.
    ///
    /// The velocity update is a convex combination of the previous velocity
    /// and the (speed-clamped) desired velocity, which satisfies both the
    /// speed ball and the per-slot change bound exactly.
    fn project_action(&self, m: usize, action: &MicroAction) -> MicroAction {
        let power = action
            .power_w
            .clamp(self.cfg.power_min_w, self.cfg.power_max_w);
        let desired = clamp_norm3(action.velocity, self.cfg.v_max);
        let prev = self.auvs[m].thrust_velocity;
        let dv = sub3(desired, prev);
        let dv_norm = norm3(dv);
        let step = if dv_norm > self.cfg.dv_max {
            self.cfg.dv_max / dv_norm
        } else {
            1.0
        };
        let velocity = add3(prev, scale3(dv, step));
        debug_assert!(norm3(velocity) <= self.cfg.v_max + 1e-9);
        debug_assert!(norm3(sub3(velocity, prev)) <= self.cfg.dv_max + 1e-9);
        MicroAction {
            power_w: power,
            velocity,
        }
    }

    /// Executes one micro slot of joint actions (`None` for unselected AUVs).
    pub fn micro_step(
        &mut self,
        actions: &[Option<MicroAction>],
    ) -> Result<MicroStepRecord, EnvError> {
        if !matches!(self.phase, Phase::Micro) {
            return Err(EnvError::Lifecycle("micro_step outside a micro episode"));
        }
        if self.micro_slot >= self.cfg.micro_steps {
            return Err(EnvError::Lifecycle("micro budget already exhausted"));
        }
        if actions.len() != self.cfg.n_auvs {
            return Err(EnvError::SelectionLength {
                got: actions.len(),
                expected: self.cfg.n_auvs,
            });
        }
        for m in 0..self.cfg.n_auvs {
            match (self.selection[m], &actions[m]) {
                (true, None) => return Err(EnvError::MissingAction(m)),
                (false, Some(_)) => return Err(EnvError::ActionForUnselected(m)),
                _ => {}
            }
        }

        let dt = self.cfg.energy.slot_dt;
        let mut executed: Vec<Option<MicroAction>> = vec![None; self.cfg.n_auvs];

        for m in 0..self.cfg.n_auvs {
            let Some(action) = &actions[m] else { continue };
            let exec = self.project_action(m, action);
            let old_pos = self.auvs[m].position;
            let current = self.field.current_at(old_pos);
            let displacement_v = if self.cfg.drift_displacement {
                add3(exec.velocity, current)
            } else {
                exec.velocity
            };
            let new_pos = vehicle::integrate_position(old_pos, displacement_v, dt, &self.cfg.arena);
            let relative = crate::ocean::relative_velocity(exec.velocity, current);
            let propulsion = vehicle::propulsion_energy(exec.velocity, relative, &self.cfg.energy);

            let auv = &mut self.auvs[m];
            auv.thrust_velocity = exec.velocity;
            auv.transmit_power = exec.power_w;
            auv.position = new_pos;
            auv.energy = vehicle::apply_energy(auv.energy, &[propulsion.total]);
            executed[m] = Some(exec);
        }

        self.micro_slot += 1;
        let slot = self.micro_slot; // 1-based

        // arrivals latch once; detection energy is charged at that moment
        let mut arrivals = vec![false; self.cfg.n_auvs];
        for m in 0..self.cfg.n_auvs {
            if !self.selection[m] || self.arrival_slot[m].is_some() {
                continue;
            }
            let Some(target) = self.subtargets[m] else {
                continue;
            };
            if dist3(self.auvs[m].position, target) <= self.auvs[m].detection_radius {
                self.arrival_slot[m] = Some(slot);
                arrivals[m] = true;
                let e_det =
                    vehicle::detection_energy(self.auvs[m].detection_radius, &self.cfg.energy);
                self.auvs[m].energy = vehicle::apply_energy(self.auvs[m].energy, &[e_det]);
            }
        }

        // first-slot link rates feed the task-distribution delay
        if slot == 1 {
            for m in 0..self.cfg.n_auvs {
                if self.selection[m] {
                    self.first_slot_rate[m] = self.rate_to_cauv(m);
                }
            }
        }

        self.field = self.field.advance(dt);

        // covertness of this slot
        let powers: Vec<f64> = self.auvs.iter().map(|a| a.transmit_power).collect();
        let dists: Vec<f64> = self
            .auvs
            .iter()
            .map(|a| dist3(a.position, self.cfg.eavesdropper_position))
            .collect();
        let snr = acoustics::eavesdropper_snr(&self.selection, &powers, &dists, &self.cfg.channel)
            .expect("validated channel");
        let margin =
            covertness::covertness_margin(snr, self.cfg.epsilon).expect("validated epsilon");

        // reward assembly
        let w = &self.cfg.weights;
        let covert = if margin.satisfied { 1.0 } else { -1.0 };
        let task: f64 = arrivals
            .iter()
            .map(|&a| if a { w.task_bonus } else { 0.0 })
            .sum();
        let mut guidance = 0.0;
        for m in 0..self.cfg.n_auvs {
            if !self.selection[m] {
                continue;
            }
            let Some(target) = self.subtargets[m] else {
                continue;
            };
            let d_now = dist3(self.auvs[m].position, target);
            let delta = self.dist_to_sub_prev[m] - d_now;
            if delta > 0.0 {
                guidance += w.progress_gain * delta;
            } else if delta < 0.0 {
                guidance -= w.retreat_gain * delta.abs();
            }
            self.dist_to_sub_prev[m] = d_now;
        }
        let energy_deficit: f64 = self.auvs.iter().map(|a| (-a.energy).max(0.0)).sum();

        let reward = w.micro_covert * covert
            + w.micro_task * task
            + w.micro_guidance * guidance
            + w.micro_energy * energy_deficit;

        self.slot_rewards.push(reward);
        self.slot_kls.push(margin.kl);
        self.slot_covert.push(margin.satisfied);

        Ok(MicroStepRecord {
            reward,
            components: RewardComponents {
                covert,
                task,
                guidance,
                energy_deficit,
            },
            kl: margin.kl,
            covert_ok: margin.satisfied,
            executed,
            positions: self.auvs.iter().map(|a| a.position).collect(),
            arrivals,
            observations: self.observe_all(),
            done: self.micro_slot >= self.cfg.micro_steps,
        })
    }

    /// Single-transmitter link rate from AUV `m` to the central AUV at the
    /// current positions and powers.
    fn rate_to_cauv(&self, m: usize) -> f64 {
        let d = dist3(self.auvs[m].position, self.cfg.cauv_position);
        let budget = acoustics::path_loss(&self.cfg.channel, d.max(acoustics::MIN_DISTANCE_M))
            .expect("validated channel");
        acoustics::link_rate(
            &[true],
            &[self.auvs[m].transmit_power],
            &[budget.gain_linear],
            budget.noise_power_w,
            self.cfg.channel.bandwidth_hz,
        )
    }

    /// Closes the macro step: result fusion, delays, coverage, efficiency and
    /// the macro reward. Requires the micro budget to be exhausted.
    pub fn finish_macro(&mut self) -> Result<MacroStepRecord, EnvError> {
        if !matches!(self.phase, Phase::Micro) {
            return Err(EnvError::Lifecycle("no macro step in progress"));
        }
        if self.micro_slot < self.cfg.micro_steps {
            return Err(EnvError::Lifecycle("micro budget not exhausted yet"));
        }

        let task = self.tasks[self.task_idx].clone();
        let stall_cap = self.cfg.micro_steps as f64 * self.cfg.energy.slot_dt;
        let delay_cfg = DelayConfig {
            slot_dt: self.cfg.energy.slot_dt,
            micro_budget: self.cfg.micro_steps,
            paper_literal_delays: self.cfg.paper_literal_delays,
            stall_cap_s: stall_cap,
        };

        let mut delays: Vec<Option<PhaseDelays>> = vec![None; self.cfg.n_auvs];
        let mut selected_delays = Vec::new();
        for m in 0..self.cfg.n_auvs {
            if !self.selection[m] {
                continue;
            }
            let upload_rate = self.rate_to_cauv(m);
            let inputs = PhaseInputs {
                radius_m: self.auvs[m].detection_radius,
                distribution_rate_bps: self.first_slot_rate[m],
                distribution_distance_m: self.begin_dist_cauv[m],
                upload_rate_bps: upload_rate,
                upload_distance_m: dist3(self.auvs[m].position, self.cfg.cauv_position),
                arrival_slot: self.arrival_slot[m],
            };
            let d = tasking::phase_delays(&task, &inputs, &delay_cfg);
            if d.arrived && upload_rate > 0.0 {
                let e_trans = vehicle::transmission_energy(
                    self.auvs[m].transmit_power,
                    task.upload_bits(inputs.radius_m),
                    upload_rate,
                    &self.cfg.energy,
                )
                .expect("positive rate checked");
                self.auvs[m].energy = vehicle::apply_energy(self.auvs[m].energy, &[e_trans]);
            }
            selected_delays.push(d);
            delays[m] = Some(d);
        }

        let radii: Vec<f64> = self.auvs.iter().map(|a| a.detection_radius).collect();
        let coverage =
            tasking::coverage_ratio(&self.selection, &radii, task.length_l, task.width_w);
        let (t_task, efficiency) = tasking::task_time_and_efficiency(&selected_delays, coverage)
            .expect("selection repaired to be non-empty");

        let mean_micro_reward = mean(&self.slot_rewards);
        let mean_kl = mean(&self.slot_kls);
        let covert_rate = self.slot_covert.iter().filter(|&&c| c).count() as f64
            / self.slot_covert.len().max(1) as f64;

        let w = &self.cfg.weights;
        let macro_reward = w.macro_coverage * coverage
            + w.macro_delay * t_task
            + w.macro_micro * mean_micro_reward;

        self.task_idx += 1;
        self.episode_done = self.task_idx >= self.cfg.macro_steps;
        self.phase = Phase::Idle;

        Ok(MacroStepRecord {
            coverage,
            t_task,
            efficiency,
            macro_reward,
            mean_micro_reward,
            mean_kl,
            covert_rate,
            remaining_energy: self.auvs.iter().map(|a| a.energy).collect(),
            selection: self.selection.clone(),
            repaired: self.repaired,
            placement_best_effort: self.placement_best_effort,
            arrived: self.arrival_slot.iter().map(|a| a.is_some()).collect(),
            delays,
            done: self.episode_done,
        })
    }

    /// Runs a full macro step with micro actions supplied per slot by
    /// `controller` (slot index, environment view) and returns the fusion
    /// record plus all per-slot records.
    pub fn macro_step<F>(
        &mut self,
        selection: &[bool],
        scores: &[f64],
        mut controller: F,
    ) -> Result<(MacroStepRecord, Vec<MicroStepRecord>), EnvError>
    where
        F: FnMut(usize, &UnderwaterEnv) -> Vec<Option<MicroAction>>,
    {
        self.begin_macro(selection, scores)?;
        let mut slots = Vec::with_capacity(self.cfg.micro_steps);
        for slot in 0..self.cfg.micro_steps {
            let actions = controller(slot, self);
            slots.push(self.micro_step(&actions)?);
        }
        let record = self.finish_macro()?;
        Ok((record, slots))
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
