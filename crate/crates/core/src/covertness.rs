//! Eavesdropper detection model.
//!
//! The eavesdropper observes a zero-mean real Gaussian sample per slot:
//! variance `sigma0^2 = N_d` when the team is silent, `sigma1^2 =
//! sum(G P / A) + N_d` when it transmits. Its optimal likelihood-ratio test
//! reduces to energy thresholding, and the team-side covertness requirement
//! `P_FA + P_MD >= 1 - eps` is enforced through the stricter Pinsker bound
//! `D(H0 || H1) <= 2 eps^2` on the Gaussian KL divergence.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CovertnessError {
    #[error("hypotheses degenerate: sigma1^2 ({sigma1_sq}) must exceed sigma0^2 ({sigma0_sq})")]
    DegenerateHypotheses { sigma0_sq: f64, sigma1_sq: f64 },
    #[error("SNR must be nonnegative, got {0}")]
    NegativeSnr(f64),
    #[error("covertness parameter must lie in (0, 1], got {0}")]
    EpsilonOutOfRange(f64),
}

/// Variances of the eavesdropper's observation under both hypotheses plus the
/// covertness parameter in force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisStats {
    /// Noise-only variance (W); equals the eavesdropper noise power.
    pub sigma0_sq: f64,
    /// Signal-plus-noise variance (W).
    pub sigma1_sq: f64,
    /// Covertness parameter in (0, 1].
    pub epsilon: f64,
}

/// Received-signal variance under transmission: `sum_m G_m P_m / A_m + N_d`.
///
/// `losses_linear` are the linear path-loss factors `A_{m,d}`. Selection is
/// binary, so `G` and `G^2` coincide.
pub fn eavesdropper_variance(
    selected: &[bool],
    powers_w: &[f64],
    losses_linear: &[f64],
    noise_power_w: f64,
) -> f64 {
    debug_assert!(noise_power_w > 0.0);
    let signal: f64 = selected
        .iter()
        .zip(powers_w)
        .zip(losses_linear)
        .filter(|((&g, _), _)| g)
        .map(|((_, &p), &a)| p / a)
        .sum();
    signal + noise_power_w
}

/// Energy-detector threshold equivalent to an LRT with threshold `theta`:
/// the decision `|y|^2 > theta'` matches `L(y) > theta` sample for sample.
pub fn detector_threshold(
    sigma0_sq: f64,
    sigma1_sq: f64,
    theta: f64,
) -> Result<f64, CovertnessError> {
    if !(sigma1_sq > sigma0_sq && sigma0_sq > 0.0) {
        return Err(CovertnessError::DegenerateHypotheses {
            sigma0_sq,
            sigma1_sq,
        });
    }
    debug_assert!(theta > 0.0);
    let numerator = 2.0 * theta.ln() - (sigma0_sq / sigma1_sq).ln();
    let denominator = (sigma1_sq - sigma0_sq) / (sigma0_sq * sigma1_sq);
    Ok(numerator / denominator)
}

/// Likelihood ratio `p(y | H1) / p(y | H0)` for zero-mean Gaussians.
pub fn likelihood_ratio(y: f64, sigma0_sq: f64, sigma1_sq: f64) -> f64 {
    let ratio = sigma0_sq / sigma1_sq;
    ratio.sqrt() * (y * y * (0.5 / sigma0_sq - 0.5 / sigma1_sq)).exp()
}

/// KL divergence `D(H0 || H1)` in nats as a function of the eavesdropper SNR:
/// `0.5 (ln(1 + snr) - snr / (1 + snr))`.
pub fn kl_gaussian(snr: f64) -> Result<f64, CovertnessError> {
    if snr < 0.0 {
        return Err(CovertnessError::NegativeSnr(snr));
    }
    Ok(0.5 * ((1.0 + snr).ln() - snr / (1.0 + snr)))
}

/// Outcome of the `D <= 2 eps^2` covertness test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovertnessMargin {
    pub kl: f64,
    pub limit: f64,
    pub satisfied: bool,
}

/// Evaluates the KL covertness constraint at the given SNR and epsilon.
pub fn covertness_margin(snr: f64, epsilon: f64) -> Result<CovertnessMargin, CovertnessError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(CovertnessError::EpsilonOutOfRange(epsilon));
    }
    let kl = kl_gaussian(snr)?;
    let limit = 2.0 * epsilon * epsilon;
    Ok(CovertnessMargin {
        kl,
        limit,
        satisfied: kl <= limit,
    })
}

/// Empirical false-alarm / missed-detection probabilities of the energy
/// detector at `threshold`, estimated from `samples` draws per hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionErrors {
    pub p_fa: f64,
    pub p_md: f64,
}

pub fn monte_carlo_detection_error(
    stats: &HypothesisStats,
    threshold: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> DetectionErrors {
    assert!(samples >= 1, "need at least one sample");
    let s0 = stats.sigma0_sq.sqrt();
    let s1 = stats.sigma1_sq.sqrt();
    let mut false_alarms = 0usize;
    let mut misses = 0usize;
    for _ in 0..samples {
        let y0: f64 = s0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        if y0 * y0 > threshold {
            false_alarms += 1;
        }
        let y1: f64 = s1 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        if y1 * y1 <= threshold {
            misses += 1;
        }
    }
    DetectionErrors {
        p_fa: false_alarms as f64 / samples as f64,
        p_md: misses as f64 / samples as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_for;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn silence_variance_is_noise_power() {
        let v = eavesdropper_variance(&[false, false], &[2.0, 2.0], &[10.0, 10.0], 0.2);
        assert_eq!(v, 0.2);
    }

    #[test]
    fn single_link_variance_and_snr_agree() {
        // P/A = 0.2, N = 0.2 -> sigma1^2 = 0.4, ratio 2, snr 1
        let v = eavesdropper_variance(&[true], &[2.0], &[10.0], 0.2);
        assert_relative_eq!(v, 0.4, max_relative = 1e-15);
        let snr = v / 0.2 - 1.0;
        assert_relative_eq!(snr, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn variance_never_below_noise() {
        let v = eavesdropper_variance(&[true, true], &[0.0, 1.0], &[1e9, 1e9], 0.2);
        assert!(v >= 0.2);
    }

    #[test]
    fn threshold_matches_hand_value() {
        let t = detector_threshold(1.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(t, 2.0 * 2f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn threshold_rejects_degenerate_hypotheses() {
        assert!(detector_threshold(1.0, 1.0, 1.0).is_err());
        assert!(detector_threshold(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn threshold_increases_with_theta() {
        let t1 = detector_threshold(1.0, 2.0, 1.0).unwrap();
        let t2 = detector_threshold(1.0, 2.0, 2.0).unwrap();
        assert!(t2 > t1);
    }

    #[test]
    fn kl_special_values() {
        assert_eq!(kl_gaussian(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            kl_gaussian(1.0).unwrap(),
            0.096573590279972655,
            max_relative = 1e-14
        );
        assert!(kl_gaussian(-0.1).is_err());
    }

    #[test]
    fn covert_limit_at_eps_005() {
        let m = covertness_margin(1.0, 0.05).unwrap();
        assert_relative_eq!(m.limit, 0.005, max_relative = 1e-15);
        assert!(!m.satisfied);
        assert!(covertness_margin(0.0, 0.05).unwrap().satisfied);
        assert!(covertness_margin(0.5, 1.0).unwrap().satisfied);
        assert!(covertness_margin(0.5, 0.0).is_err());
        assert!(covertness_margin(0.5, 1.5).is_err());
    }

    #[test]
    fn monte_carlo_limits() {
        let stats = HypothesisStats {
            sigma0_sq: 1.0,
            sigma1_sq: 2.0,
            epsilon: 0.05,
        };
        let mut rng = rng_for(1, "mc-limits");
        let always = monte_carlo_detection_error(&stats, 0.0, 2000, &mut rng);
        assert_eq!(always.p_fa, 1.0);
        assert_eq!(always.p_md, 0.0);
        let never = monte_carlo_detection_error(&stats, 1e12, 2000, &mut rng);
        assert_eq!(never.p_fa, 0.0);
        assert_eq!(never.p_md, 1.0);
    }

    #[test]
    fn monte_carlo_converges_to_analytic_error() {
        // sigma1^2 = 2 sigma0^2, threshold 2 ln 2: analytic xi = 0.83393592...
        let stats = HypothesisStats {
            sigma0_sq: 1.0,
            sigma1_sq: 2.0,
            epsilon: 0.05,
        };
        let mut rng = rng_for(2, "mc-converge");
        let n = 200_000;
        let e = monte_carlo_detection_error(&stats, 2.0 * 2f64.ln(), n, &mut rng);
        let xi = e.p_fa + e.p_md;
        // three binomial standard errors on each component, summed generously
        assert!((xi - 0.8339359250164871).abs() < 6.0 * (0.25f64 / n as f64).sqrt() * 2.0);
    }

    #[test]
    fn lrt_and_energy_detector_decide_identically() {
        for &(s0, s1, theta) in &[(1.0, 2.0, 1.0), (0.2, 0.4, 2.0), (1.0, 1.01, 1.0)] {
            let thr = detector_threshold(s0, s1, theta).unwrap();
            let mut rng = rng_for(3, "lrt-equiv");
            for i in 0..20_000 {
                let sigma = if i % 2 == 0 { s0 } else { s1 };
                let y: f64 = sigma.sqrt()
                    * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                let lrt_says = likelihood_ratio(y, s0, s1) > theta;
                let energy_says = y * y > thr;
                assert_eq!(lrt_says, energy_says);
            }
        }
    }

    /// Simpson integration of the KL integrand for zero-mean Gaussians,
    /// independent of the closed form under test.
    fn kl_by_quadrature(sigma0_sq: f64, sigma1_sq: f64) -> f64 {
        let support = 8.0 * sigma0_sq.max(sigma1_sq).sqrt();
        let n = 10_000; // Simpson intervals (even)
        let h = 2.0 * support / n as f64;
        let p = |y: f64, var: f64| (-y * y / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        let f = |y: f64| {
            let p0 = p(y, sigma0_sq);
            p0 * (p0 / p(y, sigma1_sq)).ln()
        };
        let mut acc = f(-support) + f(support);
        for i in 1..n {
            let y = -support + i as f64 * h;
            acc += f(y) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn kl_matches_numeric_integration() {
        for &snr in &[0.01, 0.1, 1.0, 10.0] {
            let closed = kl_gaussian(snr).unwrap();
            let numeric = kl_by_quadrature(1.0, 1.0 + snr);
            assert!(
                (closed - numeric).abs() < 1e-6,
                "snr {snr}: closed {closed} vs numeric {numeric}"
            );
        }
    }

    proptest! {
        #[test]
        fn kl_variance_ratio_identity(ratio in 1.0f64..50.0) {
            // D(snr) with snr = ratio - 1 equals 0.5 (ln ratio + 1/ratio - 1)
            let via_snr = kl_gaussian(ratio - 1.0).unwrap();
            let via_ratio = 0.5 * (ratio.ln() + 1.0 / ratio - 1.0);
            prop_assert!((via_snr - via_ratio).abs() < 1e-12);
        }

        #[test]
        fn kl_is_monotone(a in 0.0f64..20.0, b in 0.0f64..20.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(kl_gaussian(lo).unwrap() <= kl_gaussian(hi).unwrap());
        }

        #[test]
        fn margin_satisfaction_is_monotone(snr in 0.0f64..5.0, eps in 0.01f64..0.9) {
            let m = covertness_margin(snr, eps).unwrap();
            if m.satisfied {
                prop_assert!(covertness_margin(snr * 0.5, eps).unwrap().satisfied);
            }
        }
    }
}
