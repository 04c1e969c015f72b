//! PPO networks, losses and analytic gradients.
//!
//! The actor loss is the clipped surrogate plus an entropy bonus; the critic
//! loss is the mean squared error against the GAE returns. Gradients are
//! hand-derived and checked against central finite differences in the test
//! suite, since everything downstream depends on them.

use super::heads::{gaussian_entropy, BernoulliHead, SquashSpec};
use super::net::{clip_grad_norm, Adam, DenseNet};
use rand::Rng;

/// PPO hyperparameters. Defaults mirror the reference settings (clip 0.2,
/// gamma 0.99, lambda 0.95, 8 epochs, minibatches 512/16, update thresholds
/// 2048/32, learning rates 3e-5 and 5e-5, entropy coefficient 0.01).
#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatch_micro: usize,
    pub minibatch_macro: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub entropy_coeff: f64,
    pub grad_clip: f64,
    /// Micro buffer size (actor transitions) that triggers an update.
    pub update_micro: usize,
    /// Macro buffer size (macro transitions) that triggers an update.
    pub update_macro: usize,
    pub adv_norm_eps: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            epochs: 8,
            minibatch_micro: 512,
            minibatch_macro: 16,
            lr_actor: 3e-5,
            lr_critic: 5e-5,
            entropy_coeff: 0.01,
            grad_clip: 0.5,
            update_micro: 2048,
            update_macro: 32,
            adv_norm_eps: 1e-8,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(format!("clip {} outside (0, 1)", self.clip));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if !(self.gae_lambda > 0.0 && self.gae_lambda <= 1.0) {
            return Err(format!("gae_lambda {} outside (0, 1]", self.gae_lambda));
        }
        if self.epochs == 0 || self.minibatch_micro == 0 || self.minibatch_macro == 0 {
            return Err("epochs and minibatch sizes must be positive".into());
        }
        if self.update_micro == 0 || self.update_macro == 0 {
            return Err("update thresholds must be positive".into());
        }
        Ok(())
    }
}

/// Continuous-control actor: net maps observation to pre-squash means; the
/// per-dimension log-std is state independent and learned.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianActor {
    pub net: DenseNet,
    pub log_std: Vec<f64>,
    pub squash: SquashSpec,
}

impl GaussianActor {
    pub fn new(dims: &[usize], squash: SquashSpec, log_std_init: f64, rng: &mut impl Rng) -> Self {
        assert_eq!(*dims.last().unwrap(), squash.dim());
        GaussianActor {
            net: DenseNet::orthogonal(dims, 1.0, 0.01, rng),
            log_std: vec![log_std_init; squash.dim()],
            squash,
        }
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count() + self.log_std.len()
    }

    /// Stochastic action; returns (pre-squash sample, action, log-prob).
    pub fn sample(&self, obs: &[f64], rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>, f64) {
        let mean = self.net.forward(obs);
        self.squash.sample(&mean, &self.log_std, rng)
    }

    /// Deterministic action (squashed mean).
    pub fn mean_action(&self, obs: &[f64]) -> Vec<f64> {
        self.squash.mean_action(&self.net.forward(obs))
    }
}

/// Macro selection actor producing Bernoulli logits.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliActor {
    pub net: DenseNet,
}

impl BernoulliActor {
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Self {
        BernoulliActor {
            net: DenseNet::orthogonal(dims, 1.0, 0.01, rng),
        }
    }

    pub fn sample(&self, state: &[f64], rng: &mut impl Rng) -> (Vec<bool>, f64, Vec<f64>) {
        BernoulliHead::sample(&self.net.forward(state), rng)
    }

    pub fn deterministic(&self, state: &[f64]) -> (Vec<bool>, Vec<f64>) {
        let logits = self.net.forward(state);
        (BernoulliHead::deterministic(&logits), BernoulliHead::probs(&logits))
    }
}

/// State-value network (scalar output).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub net: DenseNet,
}

impl ValueNet {
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Self {
        assert_eq!(*dims.last().unwrap(), 1);
        ValueNet {
            net: DenseNet::orthogonal(dims, 1.0, 1.0, rng),
        }
    }

    pub fn value(&self, state: &[f64]) -> f64 {
        self.net.forward(state)[0]
    }
}

/// Normalizes advantages in place to zero mean / unit variance.
pub fn normalize_advantages(adv: &mut [f64], eps: f64) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(eps);
    for a in adv.iter_mut() {
        *a = (*a - mean) / std;
    }
}

/// Whether the min in the clipped surrogate selects the unclipped branch
/// (which is the only branch that carries gradient).
fn unclipped_active(ratio: f64, adv: f64, clip: f64) -> bool {
    let unclipped = ratio * adv;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * adv;
    unclipped <= clipped
}

/// Clipped-surrogate loss and gradients for a Gaussian actor minibatch.
///
/// Returns `(loss, d_net_params, d_log_std)`. Advantages are expected to be
/// normalized already. `u` are the stored pre-squash samples; the tanh
/// correction cancels between new and old log-probs, but both include it so
/// the reported loss matches the definition.
pub fn gaussian_actor_loss_grad(
    actor: &GaussianActor,
    obs: &[Vec<f64>],
    u: &[Vec<f64>],
    logp_old: &[f64],
    adv: &[f64],
    clip: f64,
    entropy_coeff: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let batch = obs.len() as f64;
    let dim = actor.log_std.len();
    let mut loss = 0.0;
    let mut d_net = vec![0.0; actor.net.param_count()];
    let mut d_log_std = vec![0.0; dim];

    for i in 0..obs.len() {
        let (mean, cache) = actor.net.forward_cached(&obs[i]);
        let lp = actor.squash.log_prob(&u[i], &mean, &actor.log_std);
        let ratio = (lp - logp_old[i]).exp();
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * adv[i];
        let unclipped = ratio * adv[i];
        loss += -unclipped.min(clipped) / batch;

        if unclipped_active(ratio, adv[i], clip) {
            // d(-surr)/d lp = -adv * ratio
            let coeff = -adv[i] * ratio / batch;
            let mut d_mean = vec![0.0; dim];
            for j in 0..dim {
                let inv_var = (-2.0 * actor.log_std[j]).exp();
                let centered = u[i][j] - mean[j];
                // d lp / d mean_j and d lp / d log_std_j
                d_mean[j] = coeff * (centered * inv_var);
                d_log_std[j] += coeff * (centered * centered * inv_var - 1.0);
            }
            actor.net.backward(&cache, &d_mean, &mut d_net);
        }
    }

    // entropy bonus: state independent, depends only on log_std
    let entropy = gaussian_entropy(&actor.log_std);
    loss -= entropy_coeff * entropy;
    for g in d_log_std.iter_mut() {
        *g -= entropy_coeff;
    }

    (loss, d_net, d_log_std)
}

/// Clipped-surrogate loss and gradient for the Bernoulli macro actor.
pub fn bernoulli_actor_loss_grad(
    actor: &BernoulliActor,
    states: &[Vec<f64>],
    samples: &[Vec<bool>],
    logp_old: &[f64],
    adv: &[f64],
    clip: f64,
    entropy_coeff: f64,
) -> (f64, Vec<f64>) {
    let batch = states.len() as f64;
    let mut loss = 0.0;
    let mut d_net = vec![0.0; actor.net.param_count()];

    for i in 0..states.len() {
        let (logits, cache) = actor.net.forward_cached(&states[i]);
        let lp = BernoulliHead::log_prob(&logits, &samples[i]);
        let ratio = (lp - logp_old[i]).exp();
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * adv[i];
        let unclipped = ratio * adv[i];
        loss += -unclipped.min(clipped) / batch;
        loss -= entropy_coeff * BernoulliHead::entropy(&logits) / batch;

        let probs = BernoulliHead::probs(&logits);
        let mut d_logits = vec![0.0; logits.len()];
        if unclipped_active(ratio, adv[i], clip) {
            let coeff = -adv[i] * ratio / batch;
            for m in 0..logits.len() {
                let g = if samples[i][m] { 1.0 } else { 0.0 };
                d_logits[m] += coeff * (g - probs[m]);
            }
        }
        for m in 0..logits.len() {
            // d entropy / d logit = -logit * p * (1 - p)
            d_logits[m] -= entropy_coeff / batch * (-logits[m] * probs[m] * (1.0 - probs[m]));
        }
        actor.net.backward(&cache, &d_logits, &mut d_net);
    }

    (loss, d_net)
}

/// MSE critic loss and gradient against the returns.
pub fn critic_loss_grad(critic: &ValueNet, states: &[Vec<f64>], returns: &[f64]) -> (f64, Vec<f64>) {
    let batch = states.len() as f64;
    let mut loss = 0.0;
    let mut d_net = vec![0.0; critic.net.param_count()];
    for i in 0..states.len() {
        let (out, cache) = critic.net.forward_cached(&states[i]);
        let err = out[0] - returns[i];
        loss += err * err / batch;
        critic.net.backward(&cache, &[2.0 * err / batch], &mut d_net);
    }
    (loss, d_net)
}

/// Loose bounds keeping the learned log-std in a sane range regardless of
/// how long the entropy bonus pushes on it.
pub const LOG_STD_MIN: f64 = -4.0;
pub const LOG_STD_MAX: f64 = 0.5;

/// Adam state for a Gaussian actor (net and log-std stepped together under a
/// shared global gradient-norm clip).
pub struct GaussianActorOpt {
    adam_net: Adam,
    adam_log_std: Adam,
}

impl GaussianActorOpt {
    pub fn new(lr: f64, actor: &GaussianActor) -> Self {
        GaussianActorOpt {
            adam_net: Adam::new(lr, actor.net.param_count()),
            adam_log_std: Adam::new(lr, actor.log_std.len()),
        }
    }

    pub fn step(
        &mut self,
        actor: &mut GaussianActor,
        mut d_net: Vec<f64>,
        mut d_log_std: Vec<f64>,
        grad_clip: f64,
    ) {
        let norm: f64 = d_net
            .iter()
            .chain(d_log_std.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        if norm > grad_clip && norm > 0.0 {
            let s = grad_clip / norm;
            d_net.iter_mut().for_each(|g| *g *= s);
            d_log_std.iter_mut().for_each(|g| *g *= s);
        }
        self.adam_net.step(actor.net.params_mut(), &d_net);
        self.adam_log_std.step(&mut actor.log_std, &d_log_std);
        for ls in actor.log_std.iter_mut() {
            *ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }
}

/// Adam state for a single-net module (Bernoulli actor or critic).
pub struct NetOpt {
    adam: Adam,
}

impl NetOpt {
    pub fn new(lr: f64, net: &DenseNet) -> Self {
        NetOpt {
            adam: Adam::new(lr, net.param_count()),
        }
    }

    pub fn step(&mut self, net: &mut DenseNet, mut grad: Vec<f64>, grad_clip: f64) {
        clip_grad_norm(&mut grad, grad_clip);
        self.adam.step(net.params_mut(), &grad);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_for;
    use approx::assert_relative_eq;

    fn tiny_actor(rng: &mut impl Rng) -> GaussianActor {
        let squash = SquashSpec {
            offsets: vec![1.0, 0.0],
            scales: vec![1.0, 2.0],
        };
        GaussianActor::new(&[3, 4, 2], squash, -0.5, rng)
    }

    #[test]
    fn surrogate_special_cases() {
        // ratio = 1 everywhere: loss = -mean(adv) plus the entropy term
        let mut rng = rng_for(1, "ppo-ratio1");
        let actor = tiny_actor(&mut rng);
        let obs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut u = Vec::new();
        let mut logp = Vec::new();
        for o in &obs {
            let (ui, _, lpi) = actor.sample(o, &mut rng);
            u.push(ui);
            logp.push(lpi);
        }
        let adv = vec![0.5, -1.0, 2.0, 0.25];
        let (loss, _, _) = gaussian_actor_loss_grad(&actor, &obs, &u, &logp, &adv, 0.2, 0.0);
        let mean_adv = adv.iter().sum::<f64>() / 4.0;
        assert_relative_eq!(loss, -mean_adv, max_relative = 1e-10);
    }

    #[test]
    fn clip_arithmetic() {
        // scalar surrogate checks through the loss of a 1-sample batch
        let check = |ratio: f64, adv: f64, expect: f64| {
            let clipped = ratio.clamp(0.8, 1.2) * adv;
            let unclipped = ratio * adv;
            assert_relative_eq!(unclipped.min(clipped), expect, max_relative = 1e-12);
        };
        check(2.0, 1.0, 1.2); // clipped branch picked for big ratio, adv > 0
        // adv < 0, ratio below the band: the clipped value 0.8*adv is the
        // smaller (more negative) one, so the min takes it and the sample
        // carries no gradient
        check(0.5, -1.0, -0.8);
        check(1.0, 3.0, 3.0); // no clipping at ratio 1
    }

    #[test]
    fn per_sample_surrogate_never_exceeds_clip_bound() {
        let mut rng = rng_for(2, "ppo-bound");
        let actor = tiny_actor(&mut rng);
        for _ in 0..200 {
            let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_u, _, lp) = actor.sample(&obs, &mut rng);
            let logp_old = lp + rng.random_range(-1.0..1.0);
            let adv: f64 = rng.random_range(-2.0..2.0);
            let ratio = (lp - logp_old).exp();
            let surr = (ratio * adv).min(ratio.clamp(0.8, 1.2) * adv);
            assert!(surr <= 1.2 * adv.abs() + 1e-12);
        }
    }

    /// Central finite differences over every parameter of the actor loss.
    #[test]
    fn gaussian_gradients_match_finite_differences() {
        let mut rng = rng_for(3, "ppo-fd");
        let mut actor = tiny_actor(&mut rng);
        let batch = 6;
        let mut obs = Vec::new();
        let mut u = Vec::new();
        let mut logp_old = Vec::new();
        let mut adv = Vec::new();
        let mut k = 0;
        while obs.len() < batch {
            let o: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (ui, _, lp) = actor.sample(&o, &mut rng);
            let lp_old = lp + rng.random_range(-0.4..0.4);
            let a: f64 = rng.random_range(-2.0..2.0);
            let ratio = (lp - lp_old).exp();
            // keep away from the clip kinks so the loss is smooth at the test point
            if (ratio - 0.8).abs() < 5e-3 || (ratio - 1.2).abs() < 5e-3 || a.abs() < 1e-3 {
                k += 1;
                assert!(k < 1000);
                continue;
            }
            obs.push(o);
            u.push(ui);
            logp_old.push(lp_old);
            adv.push(a);
        }
        let (_, d_net, d_ls) =
            gaussian_actor_loss_grad(&actor, &obs, &u, &logp_old, &adv, 0.2, 0.01);
        let h = 1e-6;
        let loss_at = |actor: &GaussianActor| {
            gaussian_actor_loss_grad(actor, &obs, &u, &logp_old, &adv, 0.2, 0.01).0
        };
        for p in 0..actor.net.param_count() {
            let orig = actor.net.params()[p];
            actor.net.params_mut()[p] = orig + h;
            let up = loss_at(&actor);
            actor.net.params_mut()[p] = orig - h;
            let down = loss_at(&actor);
            actor.net.params_mut()[p] = orig;
            let fd = (up - down) / (2.0 * h);
            let denom = fd.abs().max(d_net[p].abs()).max(1e-6);
            assert!(
                (fd - d_net[p]).abs() / denom < 1e-4,
                "net param {p}: fd {fd} vs {}",
                d_net[p]
            );
        }
        for j in 0..actor.log_std.len() {
            let orig = actor.log_std[j];
            actor.log_std[j] = orig + h;
            let up = loss_at(&actor);
            actor.log_std[j] = orig - h;
            let down = loss_at(&actor);
            actor.log_std[j] = orig;
            let fd = (up - down) / (2.0 * h);
            let denom = fd.abs().max(d_ls[j].abs()).max(1e-6);
            assert!((fd - d_ls[j]).abs() / denom < 1e-4);
        }
    }

    #[test]
    fn bernoulli_gradients_match_finite_differences() {
        let mut rng = rng_for(4, "ppo-fd-bern");
        let mut actor = BernoulliActor::new(&[4, 3, 2], &mut rng);
        let batch = 6;
        let mut states = Vec::new();
        let mut samples = Vec::new();
        let mut logp_old = Vec::new();
        let mut adv = Vec::new();
        while states.len() < batch {
            let s: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (g, lp, _) = actor.sample(&s, &mut rng);
            let lp_old = lp + rng.random_range(-0.4..0.4);
            let a: f64 = rng.random_range(-2.0..2.0);
            let ratio = (lp - lp_old).exp();
            if (ratio - 0.8).abs() < 5e-3 || (ratio - 1.2).abs() < 5e-3 || a.abs() < 1e-3 {
                continue;
            }
            states.push(s);
            samples.push(g);
            logp_old.push(lp_old);
            adv.push(a);
        }
        let (_, d_net) =
            bernoulli_actor_loss_grad(&actor, &states, &samples, &logp_old, &adv, 0.2, 0.01);
        let h = 1e-6;
        for p in 0..actor.net.param_count() {
            let orig = actor.net.params()[p];
            actor.net.params_mut()[p] = orig + h;
            let up =
                bernoulli_actor_loss_grad(&actor, &states, &samples, &logp_old, &adv, 0.2, 0.01).0;
            actor.net.params_mut()[p] = orig - h;
            let down =
                bernoulli_actor_loss_grad(&actor, &states, &samples, &logp_old, &adv, 0.2, 0.01).0;
            actor.net.params_mut()[p] = orig;
            let fd = (up - down) / (2.0 * h);
            let denom = fd.abs().max(d_net[p].abs()).max(1e-6);
            assert!((fd - d_net[p]).abs() / denom < 1e-4);
        }
    }

    #[test]
    fn critic_gradients_match_finite_differences() {
        let mut rng = rng_for(5, "ppo-fd-critic");
        let mut critic = ValueNet::new(&[4, 5, 1], &mut rng);
        let states: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let returns: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, d_net) = critic_loss_grad(&critic, &states, &returns);
        let h = 1e-6;
        for p in 0..critic.net.param_count() {
            let orig = critic.net.params()[p];
            critic.net.params_mut()[p] = orig + h;
            let up = critic_loss_grad(&critic, &states, &returns).0;
            critic.net.params_mut()[p] = orig - h;
            let down = critic_loss_grad(&critic, &states, &returns).0;
            critic.net.params_mut()[p] = orig;
            let fd = (up - down) / (2.0 * h);
            let denom = fd.abs().max(d_net[p].abs()).max(1e-6);
            assert!((fd - d_net[p]).abs() / denom < 1e-4);
        }
    }

    #[test]
    fn advantage_normalization_is_standard() {
        let mut adv = vec![1.0, 2.0, 3.0, 4.0];
        normalize_advantages(&mut adv, 1e-8);
        let mean: f64 = adv.iter().sum::<f64>() / 4.0;
        let var: f64 = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert_relative_eq!(var, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = PpoConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.clip = 1.5;
        assert!(cfg.validate().is_err());
    }
}
