//! Fixed input scaling for the three network input families.
//!
//! Raw simulator quantities span several orders of magnitude (positions in
//! hundreds of meters, energies in tens of kilojoules); tanh networks need
//! inputs near unit scale. The divisors are constants and part of the
//! checkpoint contract: a saved policy only makes sense with the scaling it
//! was trained under.

use crate::env::MICRO_OBS_LEN;

pub const POSITION_SCALE: f64 = 100.0;
pub const VELOCITY_SCALE: f64 = 5.0;
pub const ENERGY_SCALE: f64 = 1e4;

/// Scales a micro observation feature vector (see
/// [`crate::env::MicroObservation::features`] for the layout).
pub fn scale_micro_obs(raw: &[f64; MICRO_OBS_LEN]) -> Vec<f64> {
    let mut f = Vec::with_capacity(MICRO_OBS_LEN);
    f.push(raw[0] / POSITION_SCALE);
    f.push(raw[1] / POSITION_SCALE);
    f.push(raw[2] / POSITION_SCALE);
    for i in 3..6 {
        f.push(raw[i] / POSITION_SCALE);
    }
    for i in 6..9 {
        f.push(raw[i] / VELOCITY_SCALE);
    }
    f.push(raw[9]);
    f.push(raw[10] / ENERGY_SCALE);
    f
}

/// Scales a macro state (per AUV: position x3, energy).
pub fn scale_macro_state(raw: &[f64]) -> Vec<f64> {
    debug_assert_eq!(raw.len() % 4, 0);
    let mut f = Vec::with_capacity(raw.len());
    for chunk in raw.chunks_exact(4) {
        f.push(chunk[0] / POSITION_SCALE);
        f.push(chunk[1] / POSITION_SCALE);
        f.push(chunk[2] / POSITION_SCALE);
        f.push(chunk[3] / ENERGY_SCALE);
    }
    f
}

/// Scales a global state (per AUV: pos x3, vel x3, E, G, d_sub; then task
/// center x3, l, w, and the two eavesdropper distance summaries).
pub fn scale_global_state(raw: &[f64], n_auvs: usize) -> Vec<f64> {
    debug_assert_eq!(raw.len(), 9 * n_auvs + 7);
    let mut f = Vec::with_capacity(raw.len());
    for m in 0..n_auvs {
        let b = 9 * m;
        for i in 0..3 {
            f.push(raw[b + i] / POSITION_SCALE);
        }
        for i in 3..6 {
            f.push(raw[b + i] / VELOCITY_SCALE);
        }
        f.push(raw[b + 6] / ENERGY_SCALE);
        f.push(raw[b + 7]);
        f.push(raw[b + 8] / POSITION_SCALE);
    }
    let t = 9 * n_auvs;
    for i in 0..5 {
        f.push(raw[t + i] / POSITION_SCALE);
    }
    f.push(raw[t + 5] / POSITION_SCALE);
    f.push(raw[t + 6] / POSITION_SCALE);
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn micro_scaling_keeps_width_and_flag() {
        let raw = [
            120.0, 80.0, 40.0, 10.0, -20.0, -50.0, 2.5, -1.0, 0.5, 1.0, 15000.0,
        ];
        let f = scale_micro_obs(&raw);
        assert_eq!(f.len(), MICRO_OBS_LEN);
        assert_eq!(f[9], 1.0);
        assert!((f[0] - 1.2).abs() < 1e-12);
        assert!((f[6] - 0.5).abs() < 1e-12);
        assert!((f[10] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn global_scaling_keeps_width() {
        let n = 3;
        let raw: Vec<f64> = (0..9 * n + 7).map(|i| i as f64).collect();
        assert_eq!(scale_global_state(&raw, n).len(), raw.len());
    }
}
