//! Generalized advantage estimation over one contiguous segment.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GaeError {
    #[error("length mismatch: rewards {rewards}, values {values}, dones {dones}")]
    LengthMismatch {
        rewards: usize,
        values: usize,
        dones: usize,
    },
}

/// Computes advantages and returns for one segment.
///
/// `bootstrap_value` is the critic's estimate of the state following the last
/// transition; it is used when the segment ends by truncation (last `done`
/// false) and ignored after a terminal transition. Returns are
/// `advantage + value`, matching the critic regression target.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap_value: f64,
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), GaeError> {
    if rewards.len() != values.len() || rewards.len() != dones.len() {
        return Err(GaeError::LengthMismatch {
            rewards: rewards.len(),
            values: values.len(),
            dones: dones.len(),
        });
    }
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n {
            values[t + 1]
        } else {
            bootstrap_value
        };
        let delta = rewards[t] + gamma * next_value * not_done - values[t];
        carry = delta + gamma * lambda * not_done * carry;
        advantages[t] = carry;
    }
    let returns = advantages
        .iter()
        .zip(values)
        .map(|(a, v)| a + v)
        .collect();
    Ok((advantages, returns))
}
