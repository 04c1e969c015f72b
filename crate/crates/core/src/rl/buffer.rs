//! Rollout buffers for the two PPO levels.
//!
//! Segments (one micro episode, or one full macro episode) are absorbed as a
//! whole, with GAE already applied, so every stored sample carries its final
//! advantage and return. Buffers fill until the configured update threshold
//! and are cleared after the update.

/// One micro actor sample: a single AUV's decision in one slot.
#[derive(Debug, Clone)]
pub struct MicroActorSample {
    /// Which actor parameter set produced it (0 when actors are shared).
    pub actor_idx: usize,
    /// Scaled local observation.
    pub obs: Vec<f64>,
    /// Pre-squash action sample.
    pub u: Vec<f64>,
    pub logp_old: f64,
    pub advantage: f64,
}

/// One critic regression sample.
#[derive(Debug, Clone)]
pub struct CriticSample {
    /// Which critic parameter set it targets (0 when shared).
    pub critic_idx: usize,
    /// Scaled state.
    pub state: Vec<f64>,
    pub ret: f64,
}

#[derive(Debug, Default)]
pub struct MicroBuffer {
    pub actor_samples: Vec<MicroActorSample>,
    pub critic_samples: Vec<CriticSample>,
}

impl MicroBuffer {
    pub fn len(&self) -> usize {
        self.actor_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actor_samples.is_empty()
    }

    pub fn clear(&mut self) {
        self.actor_samples.clear();
        self.critic_samples.clear();
    }
}

/// One macro transition with its PPO annotations.
#[derive(Debug, Clone)]
pub struct MacroSample {
    /// Scaled macro state.
    pub state: Vec<f64>,
    pub selection: Vec<bool>,
    pub logp_old: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Default)]
pub struct MacroBuffer {
    pub samples: Vec<MacroSample>,
}

impl MacroBuffer {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }
}
