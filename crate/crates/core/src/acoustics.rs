//! Underwater acoustic channel model.
//!
//! Thorp absorption plus power-law spreading gives the per-link path loss;
//! ambient noise is the classic four-component (turbulence / shipping / wind
//! waves / thermal) spectral model. Loss is carried in dB and converted to a
//! linear gain only at the end, so large distances cannot overflow the linear
//! `a(f)^d` form.
//!
//! All functions are pure; rollout workers may call them concurrently.

use thiserror::Error;

/// Minimum link distance in meters. The spreading term is a far-field
/// approximation; below 1 m it would yield gains above unity.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum AcousticsError {
    #[error("frequency must be positive, got {0} kHz")]
    NonPositiveFrequency(f64),
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("invalid channel parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },
}

/// Which numerator the second Thorp term uses.
///
/// The classical formula has `44 f^2 / (4100 + f^2)`; some printings carry
/// `44 f^3` instead. The default is the classical form; the literal variant is
/// retained for fidelity studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThorpVariant {
    #[default]
    StandardF2,
    PaperLiteralF3,
}

/// Acoustic channel parameters shared by all link computations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Carrier frequency in kHz.
    pub carrier_f_khz: f64,
    /// Receiver bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Spreading exponent chi (1 = cylindrical, 2 = spherical).
    pub spreading_chi: f64,
    /// Shipping activity factor in [0, 1].
    pub shipping_s: f64,
    /// Wind speed in m/s.
    pub wind_w: f64,
    /// When set, every receiver uses this constant noise power (W) instead of
    /// the spectral model integrated over the bandwidth.
    pub noise_override_w: Option<f64>,
    pub thorp: ThorpVariant,
}

impl Default for ChannelParams {
    /// Reference configuration: 30 kHz carrier, 10 MHz band, chi = 1.5,
    /// constant 0.2 W receiver noise.
    fn default() -> Self {
        ChannelParams {
            carrier_f_khz: 30.0,
            bandwidth_hz: 1.0e7,
            spreading_chi: 1.5,
            shipping_s: 0.5,
            wind_w: 0.0,
            noise_override_w: Some(0.2),
            thorp: ThorpVariant::StandardF2,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), AcousticsError> {
        if self.carrier_f_khz <= 0.0 {
            return Err(AcousticsError::NonPositiveFrequency(self.carrier_f_khz));
        }
        let checks = [
            ("bandwidth_hz", self.bandwidth_hz, self.bandwidth_hz > 0.0),
            (
                "spreading_chi",
                self.spreading_chi,
                (1.0..=2.0).contains(&self.spreading_chi),
            ),
            (
                "shipping_s",
                self.shipping_s,
                (0.0..=1.0).contains(&self.shipping_s),
            ),
            ("wind_w", self.wind_w, self.wind_w >= 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok {
                return Err(AcousticsError::InvalidParam { name, value });
            }
        }
        if let Some(n) = self.noise_override_w {
            if n <= 0.0 {
                return Err(AcousticsError::InvalidParam {
                    name: "noise_override_w",
                    value: n,
                });
            }
        }
        Ok(())
    }

    /// Noise power (W) seen by any receiver under these parameters.
    pub fn noise_power_w(&self) -> f64 {
        match self.noise_override_w {
            Some(n) => n,
            None => ambient_noise(self).expect("validated params").band_power_w,
        }
    }
}

/// One evaluated link: distance, loss in dB, the equivalent linear power gain
/// and the receiver noise power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub loss_db: f64,
    pub gain_linear: f64,
    pub noise_power_w: f64,
}

/// Thorp absorption coefficient `10 lg a(f)` in dB/km, `f` in kHz.
pub fn absorption_db_per_km(f_khz: f64, variant: ThorpVariant) -> Result<f64, AcousticsError> {
    if f_khz <= 0.0 {
        return Err(AcousticsError::NonPositiveFrequency(f_khz));
    }
    let f2 = f_khz * f_khz;
    let second_numerator = match variant {
        ThorpVariant::StandardF2 => 44.0 * f2,
        ThorpVariant::PaperLiteralF3 => 44.0 * f2 * f_khz,
    };
    Ok(0.11 * f2 / (1.0 + f2) + second_numerator / (4100.0 + f2) + 2.75e-4 * f2 + 0.003)
}

/// Path loss after `distance_m` meters: `chi * 10 lg d + (d/1000) * alpha(f)`.
///
/// Distances below [`MIN_DISTANCE_M`] are clamped so the gain stays in (0, 1].
pub fn path_loss(params: &ChannelParams, distance_m: f64) -> Result<LinkBudget, AcousticsError> {
    if distance_m <= 0.0 {
        return Err(AcousticsError::NonPositiveDistance(distance_m));
    }
    let d = distance_m.max(MIN_DISTANCE_M);
    let alpha = absorption_db_per_km(params.carrier_f_khz, params.thorp)?;
    let loss_db = params.spreading_chi * 10.0 * d.log10() + (d / 1000.0) * alpha;
    Ok(LinkBudget {
        distance_m: d,
        loss_db,
        gain_linear: 10f64.powf(-loss_db / 10.0),
        noise_power_w: params.noise_power_w(),
    })
}

/// Ambient noise decomposition at the carrier frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBreakdown {
    pub turbulence_db: f64,
    pub shipping_db: f64,
    pub waves_db: f64,
    pub thermal_db: f64,
    /// Total PSD in dB (10 lg of the summed linear components).
    pub total_psd_db: f64,
    /// Noise power over the configured bandwidth, or the override when set.
    pub band_power_w: f64,
}

/// Four-component ambient noise PSD and the in-band noise power.
pub fn ambient_noise(params: &ChannelParams) -> Result<NoiseBreakdown, AcousticsError> {
    let f = params.carrier_f_khz;
    if f <= 0.0 {
        return Err(AcousticsError::NonPositiveFrequency(f));
    }
    let lg = |x: f64| x.log10();
    let turbulence_db = 17.0 - 30.0 * lg(f);
    let shipping_db = 30.0 + 20.0 * params.shipping_s + 26.0 * lg(f) - 60.0 * lg(f + 0.03);
    let waves_db = 50.0 + 7.5 * params.wind_w.sqrt() + 20.0 * lg(f) - 40.0 * lg(f + 0.4);
    let thermal_db = -15.0 + 20.0 * lg(f);
    let lin = |db: f64| 10f64.powf(db / 10.0);
    let total_lin = lin(turbulence_db) + lin(shipping_db) + lin(waves_db) + lin(thermal_db);
    let band_power_w = match params.noise_override_w {
        Some(n) => n,
        None => total_lin * params.bandwidth_hz,
    };
    Ok(NoiseBreakdown {
        turbulence_db,
        shipping_db,
        waves_db,
        thermal_db,
        total_psd_db: 10.0 * total_lin.log10(),
        band_power_w,
    })
}

/// Eavesdropper SNR: sum over selected transmitters of `P_m / (A_m * N_d)`.
///
/// `distances_m` are transmitter-to-eavesdropper distances. Selection flags
/// are binary so the printed `G^2` and `G` forms coincide.
pub fn eavesdropper_snr(
    selected: &[bool],
    powers_w: &[f64],
    distances_m: &[f64],
    params: &ChannelParams,
) -> Result<f64, AcousticsError> {
    debug_assert_eq!(selected.len(), powers_w.len());
    debug_assert_eq!(selected.len(), distances_m.len());
    let noise = params.noise_power_w();
    let mut snr = 0.0;
    for ((&g, &p), &d) in selected.iter().zip(powers_w).zip(distances_m) {
        if g && p > 0.0 {
            let budget = path_loss(params, d)?;
            let loss_linear = 10f64.powf(budget.loss_db / 10.0);
            snr += p / (loss_linear * noise);
        }
    }
    Ok(snr)
}

/// Shannon-style link rate in bits/s: `B log2(1 + sum G^2 P g / N)`.
///
/// Gains are the linear channel gains toward the receiver. A single-transmitter
/// rate is obtained by passing a one-hot selection.
pub fn link_rate(
    selected: &[bool],
    powers_w: &[f64],
    gains_to_receiver: &[f64],
    noise_power_w: f64,
    bandwidth_hz: f64,
) -> f64 {
    debug_assert!(noise_power_w > 0.0);
    let received: f64 = selected
        .iter()
        .zip(powers_w)
        .zip(gains_to_receiver)
        .filter(|((&g, _), _)| g)
        .map(|((_, &p), &gain)| p * gain)
        .sum();
    bandwidth_hz * (1.0 + received / noise_power_w).log2()
}
