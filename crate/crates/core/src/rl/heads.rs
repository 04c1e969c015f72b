//! Policy heads: tanh-squashed Gaussian for continuous micro actions and
//! independent Bernoullis for the macro selection vector.
//!
//! The Gaussian head keeps a state-independent learnable log-std per
//! dimension. Samples are reparameterized (`u = mean + std * z`) and squashed
//! as `a = offset + scale * tanh(u)`; log-probabilities carry the standard
//! `-ln(scale (1 - tanh(u)^2))` change-of-variables correction. Entropy is
//! reported for the pre-squash Gaussian (the squashed entropy has no closed
//! form, and only gradients of the pre-squash term are used).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub const LN_2PI: f64 = 1.8378770664093453;

/// Fixed affine squash `a = offset + scale * tanh(u)` per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashSpec {
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

impl SquashSpec {
    /// Interval squash onto `[lo, hi]` for one dimension.
    pub fn interval(lo: f64, hi: f64) -> (f64, f64) {
        ((lo + hi) / 2.0, (hi - lo) / 2.0)
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    pub fn squash(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.offsets.iter().zip(&self.scales))
            .map(|(&ui, (&o, &s))| o + s * ui.tanh())
            .collect()
    }

    /// Log-density of the squashed sample identified by its pre-squash `u`.
    pub fn log_prob(&self, u: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
        gaussian_log_prob(u, mean, log_std)
            + u.iter()
                .zip(&self.scales)
                .map(|(&ui, &s)| {
                    let t = ui.tanh();
                    -(s * (1.0 - t * t)).max(1e-300).ln()
                })
                .sum::<f64>()
    }

    /// Reparameterized draw; returns (pre-squash `u`, action, log-prob).
    pub fn sample(
        &self,
        mean: &[f64],
        log_std: &[f64],
        rng: &mut impl Rng,
    ) -> (Vec<f64>, Vec<f64>, f64) {
        let u: Vec<f64> = mean
            .iter()
            .zip(log_std)
            .map(|(&m, &ls)| {
                m + ls.exp() * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            })
            .collect();
        let a = self.squash(&u);
        let lp = self.log_prob(&u, mean, log_std);
        (u, a, lp)
    }

    /// Deterministic action: squashed mean.
    pub fn mean_action(&self, mean: &[f64]) -> Vec<f64> {
        self.squash(mean)
    }
}

/// Diagonal-Gaussian log-density of `u`.
pub fn gaussian_log_prob(u: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    u.iter()
        .zip(mean.iter().zip(log_std))
        .map(|(&ui, (&m, &ls))| {
            let z = (ui - m) * (-ls).exp();
            -0.5 * LN_2PI - ls - 0.5 * z * z
        })
        .sum()
}

/// Entropy of the pre-squash diagonal Gaussian.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std
        .iter()
        .map(|&ls| 0.5 * (LN_2PI + 1.0) + ls)
        .sum()
}

/// Independent Bernoulli selection head over raw logits.
pub struct BernoulliHead;

impl BernoulliHead {
    pub fn probs(logits: &[f64]) -> Vec<f64> {
        logits.iter().map(|&l| sigmoid(l)).collect()
    }

    /// Samples a selection vector; returns (sample, joint log-prob, probs).
    pub fn sample(logits: &[f64], rng: &mut impl Rng) -> (Vec<bool>, f64, Vec<f64>) {
        let probs = Self::probs(logits);
        let sample: Vec<bool> = probs.iter().map(|&p| rng.random::<f64>() < p).collect();
        let lp = Self::log_prob(logits, &sample);
        (sample, lp, probs)
    }

    /// Joint log-probability of a selection under the logits.
    pub fn log_prob(logits: &[f64], sample: &[bool]) -> f64 {
        logits
            .iter()
            .zip(sample)
            .map(|(&l, &g)| {
                let p = sigmoid(l).clamp(1e-12, 1.0 - 1e-12);
                if g {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                }
            })
            .sum()
    }

    /// Sum of per-dimension Bernoulli entropies.
    pub fn entropy(logits: &[f64]) -> f64 {
        logits
            .iter()
            .map(|&l| {
                let p = sigmoid(l).clamp(1e-12, 1.0 - 1e-12);
                -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
            })
            .sum()
    }

    /// Thresholded deterministic selection.
    pub fn deterministic(logits: &[f64]) -> Vec<bool> {
        logits.iter().map(|&l| l >= 0.0).collect()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_for;
    use approx::assert_relative_eq;

    fn spec() -> SquashSpec {
        let (po, ps) = SquashSpec::interval(0.0, 2.0);
        SquashSpec {
            offsets: vec![po, 0.0],
            scales: vec![ps, 5.0],
        }
    }

    #[test]
    fn squash_respects_bounds() {
        let s = spec();
        for u in [-50.0, -1.0, 0.0, 1.0, 50.0] {
            let a = s.squash(&[u, u]);
            assert!((0.0..=2.0).contains(&a[0]));
            assert!((-5.0..=5.0).contains(&a[1]));
        }
    }

    #[test]
    fn tiny_std_collapses_to_the_mean() {
        let s = spec();
        let mean = [0.3, -0.8];
        let det = s.mean_action(&mean);
        let mut rng = rng_for(1, "head-collapse");
        let n = 100;
        let mut acc = [0.0f64; 2];
        for _ in 0..n {
            let (_, a, _) = s.sample(&mean, &[-10.0, -10.0], &mut rng);
            for d in 0..2 {
                acc[d] += (a[d] - det[d]).abs();
                // individual draws stay within ~20 sigma of the mean action
                assert!((a[d] - det[d]).abs() < 1e-3 * s.scales[d]);
            }
        }
        // mean deviation ~ 0.8 * e^-10 * scale, far below the 1e-4 budget
        for d in 0..2 {
            assert!(acc[d] / f64::from(n) < 1e-4 * s.scales[d]);
        }
    }

    #[test]
    fn gaussian_log_prob_at_mean_is_normalizer() {
        let lp = gaussian_log_prob(&[0.0], &[0.0], &[0.0]);
        assert_relative_eq!(lp, -0.91893853320467274, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_entropy_closed_form() {
        assert_relative_eq!(
            gaussian_entropy(&[0.0]),
            1.4189385332046727,
            max_relative = 1e-14
        );
    }

    #[test]
    fn squashed_log_prob_integrates_to_one_in_1d() {
        // trapezoid integral of exp(log_prob) over the action interval
        let s = SquashSpec {
            offsets: vec![1.0],
            scales: vec![1.0],
        };
        let mean = [0.4];
        let log_std = [-0.3];
        let n = 20_000;
        let mut acc = 0.0;
        // integrate over u and d(a) = scale (1 - tanh^2) du
        let lo = -8.0;
        let hi = 8.0;
        let h = (hi - lo) / n as f64;
        for i in 0..=n {
            let u = lo + i as f64 * h;
            let t: f64 = u.tanh();
            let jac = s.scales[0] * (1.0 - t * t);
            let dens = s.log_prob(&[u], &mean, &log_std).exp() * jac;
            acc += dens * if i == 0 || i == n { 0.5 } else { 1.0 };
        }
        assert_relative_eq!(acc * h, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn saturated_logit_always_selects() {
        let mut rng = rng_for(2, "head-sat");
        let mut ones = 0;
        for _ in 0..10_000 {
            let (g, _, _) = BernoulliHead::sample(&[20.0], &mut rng);
            ones += g[0] as usize;
        }
        assert!(ones as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn zero_logit_entropy_is_ln2() {
        assert_relative_eq!(
            BernoulliHead::entropy(&[0.0]),
            std::f64::consts::LN_2,
            max_relative = 1e-14
        );
    }

    #[test]
    fn joint_log_prob_of_all_ones_under_zero_logits() {
        let logits = [0.0, 0.0, 0.0];
        let lp = BernoulliHead::log_prob(&logits, &[true, true, true]);
        assert_relative_eq!(lp, 3.0 * 0.5f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn sampling_matches_probabilities() {
        let mut rng = rng_for(3, "head-freq");
        let logits = [1.0, -1.0];
        let mut counts = [0usize; 2];
        let n = 50_000;
        for _ in 0..n {
            let (g, _, _) = BernoulliHead::sample(&logits, &mut rng);
            counts[0] += g[0] as usize;
            counts[1] += g[1] as usize;
        }
        let p = BernoulliHead::probs(&logits);
        assert!((counts[0] as f64 / n as f64 - p[0]).abs() < 0.01);
        assert!((counts[1] as f64 / n as f64 - p[1]).abs() < 0.01);
    }
}
