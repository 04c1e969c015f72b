//! AUV kinematics and the per-slot energy ledger.
//!
//! Coordinates are z-up: underwater positions have negative z, so descent
//! means a negative vertical thrust component. Propulsion splits into an
//! induced-power horizontal term (maximal at hover), a descent term and a
//! cubic fluid-drag term on the velocity relative to the current. Detection
//! and upload energy are charged by the environment when those events occur.

use crate::{Vec3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VehicleError {
    #[error("upload of {bits} bits stalled: link rate is zero")]
    StalledUpload { bits: f64 },
}

/// Full kinematic/energetic state of one AUV.
#[derive(Debug, Clone, PartialEq)]
pub struct AuvState {
    pub position: Vec3,
    pub thrust_velocity: Vec3,
    /// Remaining energy (J); may go negative, the environment converts the
    /// deficit into a penalty.
    pub energy: f64,
    /// Sensor footprint radius (m).
    pub detection_radius: f64,
    /// Computing ability C_m feeding the detection radius.
    pub compute_c: f64,
    /// Whether the central AUV selected this vehicle for the current task.
    pub selected: bool,
    /// Transmit power (W) chosen in the current micro slot.
    pub transmit_power: f64,
}

/// Physical constants of the energy model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    /// Vehicle weight G (N).
    pub weight_n: f64,
    /// Seawater density (kg/m^3).
    pub water_density: f64,
    /// Cross-sectional area in the direction of motion (m^2).
    pub cross_section: f64,
    /// Drag coefficient.
    pub drag_cd: f64,
    /// Detection energy per unit area (J/m^2).
    pub detect_coeff: f64,
    /// Electro-acoustic conversion efficiency in (0, 1].
    pub acoustic_efficiency: f64,
    /// Micro slot duration (s).
    pub slot_dt: f64,
    /// Charge the vertical term for ascent as well as descent. Default off:
    /// ascent is treated as buoyancy-assisted.
    pub charge_ascent: bool,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            weight_n: 150.0,
            water_density: 1025.0,
            cross_section: 0.1,
            drag_cd: 0.8,
            detect_coeff: 0.5,
            acoustic_efficiency: 0.5,
            slot_dt: 2.0,
            charge_ascent: false,
        }
    }
}

/// Axis-aligned arena box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArenaBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl ArenaBox {
    pub fn clamp(&self, p: Vec3) -> Vec3 {
        [
            p[0].clamp(self.min[0], self.max[0]),
            p[1].clamp(self.min[1], self.max[1]),
            p[2].clamp(self.min[2], self.max[2]),
        ]
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Kinematic update `r' = r + dt * v`, clamped to the arena.
///
/// Displacement uses the commanded thrust velocity; the current enters the
/// energy ledger through the drag term only (a `drift_displacement` option at
/// the environment level adds the current here for sensitivity studies).
pub fn integrate_position(position: Vec3, thrust_velocity: Vec3, dt: f64, arena: &ArenaBox) -> Vec3 {
    debug_assert!(dt > 0.0);
    arena.clamp(crate::add3(position, crate::scale3(thrust_velocity, dt)))
}

/// Propulsion energy breakdown for one micro slot (J).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropulsionEnergy {
    /// Induced-power horizontal term.
    pub horizontal: f64,
    /// Descent term (weight times descent rate).
    pub descent: f64,
    /// Fluid drag on the velocity relative to the current.
    pub drag: f64,
    pub total: f64,
}

/// Propulsion energy for one slot given the commanded thrust velocity and the
/// velocity relative to the water.
pub fn propulsion_energy(
    thrust_velocity: Vec3,
    relative: Vec3,
    params: &EnergyParams,
) -> PropulsionEnergy {
    let g = params.weight_n;
    let rho_a = params.water_density * params.cross_section;
    let dt = params.slot_dt;

    let h_sq = thrust_velocity[0] * thrust_velocity[0] + thrust_velocity[1] * thrust_velocity[1];
    let bracket = h_sq + h_sq * h_sq + g * g / (rho_a * rho_a);
    let horizontal = g * g * dt / (2f64.sqrt() * rho_a) * bracket.powf(-0.5);

    // z-up: descent rate is the negative vertical component
    let descent_rate = if params.charge_ascent {
        thrust_velocity[2].abs()
    } else {
        (-thrust_velocity[2]).max(0.0)
    };
    let descent = g * descent_rate * dt;

    let rel_speed = crate::norm3(relative);
    let drag = 0.5 * rho_a * params.drag_cd * dt * rel_speed.powi(3);

    PropulsionEnergy {
        horizontal,
        descent,
        drag,
        total: horizontal + descent + drag,
    }
}

/// One-time detection energy for covering a disc of radius `radius_m`.
pub fn detection_energy(radius_m: f64, params: &EnergyParams) -> f64 {
    params.detect_coeff * std::f64::consts::PI * radius_m * radius_m
}

/// Upload energy: electrical power `P / eta_e` for the transmission time
/// `bits / rate`.
pub fn transmission_energy(
    power_w: f64,
    upload_bits: f64,
    upload_rate_bps: f64,
    params: &EnergyParams,
) -> Result<f64, VehicleError> {
    if upload_bits <= 0.0 {
        return Ok(0.0);
    }
    if upload_rate_bps <= 0.0 {
        return Err(VehicleError::StalledUpload { bits: upload_bits });
    }
    Ok(power_w / params.acoustic_efficiency * (upload_bits / upload_rate_bps))
}

/// Debits a list of nonnegative costs; the result may go negative and is
/// flagged by the caller, never clamped here.
pub fn apply_energy(energy: f64, costs: &[f64]) -> f64 {
    debug_assert!(costs.iter().all(|&c| c >= 0.0));
    energy - costs.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn arena() -> ArenaBox {
        ArenaBox {
            min: [-100.0, -100.0, -100.0],
            max: [100.0, 100.0, 0.0],
        }
    }

    #[test]
    fn zero_velocity_keeps_position() {
        let r = [1.0, 2.0, -3.0];
        assert_eq!(integrate_position(r, [0.0; 3], 2.0, &arena()), r);
    }

    #[test]
    fn linear_update() {
        let r = integrate_position([0.0, 0.0, -10.0], [1.0, 2.0, 0.0], 2.0, &arena());
        assert_eq!(r, [2.0, 4.0, -10.0]);
    }

    #[test]
    fn exit_is_clamped_to_boundary() {
        let r = integrate_position([99.0, 0.0, -0.5], [5.0, 0.0, 5.0], 2.0, &arena());
        assert_eq!(r, [100.0, 0.0, 0.0]);
    }

    #[test]
    fn hover_energy_closed_form() {
        // v_x = v_y = 0 collapses the bracket to (rho A / G)^-1... = G dt / sqrt2
        let p = EnergyParams::default();
        let e = propulsion_energy([0.0, 0.0, 0.0], [0.0; 3], &p);
        assert_relative_eq!(e.horizontal, 212.13203435596426, max_relative = 1e-12);
        assert_relative_eq!(
            e.horizontal,
            p.weight_n * p.slot_dt / 2f64.sqrt(),
            max_relative = 1e-12
        );
        assert_eq!(e.drag, 0.0);
        assert_eq!(e.descent, 0.0);
    }

    #[test]
    fn horizontal_term_verbatim_cross_check() {
        // speed 2 m/s, G = 100, rho = 1025, A = 0.1, dt = 2 (high-precision oracle)
        let p = EnergyParams {
            weight_n: 100.0,
            ..EnergyParams::default()
        };
        let e = propulsion_energy([2.0, 0.0, 0.0], [0.0; 3], &p);
        assert_relative_eq!(e.horizontal, 30.14257244299127, max_relative = 1e-12);
    }

    #[test]
    fn descent_charges_weight_times_rate() {
        // 1 m/s descent (z-up: v_z = -1), G = 100 N, dt = 2 -> 200 J
        let p = EnergyParams {
            weight_n: 100.0,
            ..EnergyParams::default()
        };
        let e = propulsion_energy([0.0, 0.0, -1.0], [0.0; 3], &p);
        assert_relative_eq!(e.descent, 200.0, max_relative = 1e-12);
        // ascent is free by default
        let up = propulsion_energy([0.0, 0.0, 1.0], [0.0; 3], &p);
        assert_eq!(up.descent, 0.0);
        let charged = EnergyParams {
            charge_ascent: true,
            weight_n: 100.0,
            ..EnergyParams::default()
        };
        let up2 = propulsion_energy([0.0, 0.0, 1.0], [0.0; 3], &charged);
        assert_relative_eq!(up2.descent, 200.0, max_relative = 1e-12);
    }

    #[test]
    fn drag_vanishes_with_relative_flow() {
        let e = propulsion_energy([1.0, 1.0, 0.0], [0.0; 3], &EnergyParams::default());
        assert_eq!(e.drag, 0.0);
    }

    #[test]
    fn detection_energy_scales_with_disc_area() {
        let p = EnergyParams::default();
        assert_eq!(detection_energy(0.0, &p), 0.0);
        assert_relative_eq!(
            detection_energy(3.0, &p),
            0.5 * std::f64::consts::PI * 9.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn transmission_energy_values() {
        let mut p = EnergyParams::default();
        p.acoustic_efficiency = 1.0;
        // P = 2 W for 10 s
        let e = transmission_energy(2.0, 1e6, 1e5, &p).unwrap();
        assert_relative_eq!(e, 20.0, max_relative = 1e-12);
        p.acoustic_efficiency = 0.5;
        let e2 = transmission_energy(2.0, 1e6, 1e5, &p).unwrap();
        assert_relative_eq!(e2, 40.0, max_relative = 1e-12);
        assert_eq!(
            transmission_energy(2.0, 1e6, 0.0, &p).unwrap_err(),
            VehicleError::StalledUpload { bits: 1e6 }
        );
        assert_eq!(transmission_energy(2.0, 0.0, 0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn ledger_is_monotone() {
        assert_eq!(apply_energy(100.0, &[]), 100.0);
        assert_eq!(apply_energy(100.0, &[60.0, 50.0]), -10.0);
    }

    proptest! {
        #[test]
        fn drag_scales_cubically(vx in -4.0f64..4.0, vy in -4.0f64..4.0, vz in -4.0f64..4.0) {
            let p = EnergyParams::default();
            let base = propulsion_energy([0.0; 3], [vx, vy, vz], &p).drag;
            let doubled = propulsion_energy([0.0; 3], [2.0 * vx, 2.0 * vy, 2.0 * vz], &p).drag;
            prop_assert!((doubled - 8.0 * base).abs() <= 1e-12 * doubled.abs().max(1.0));
        }

        #[test]
        fn horizontal_term_is_positive_and_below_hover(
            vx in -5.0f64..5.0, vy in -5.0f64..5.0
        ) {
            let p = EnergyParams::default();
            let hover = propulsion_energy([0.0; 3], [0.0; 3], &p).horizontal;
            let e = propulsion_energy([vx, vy, 0.0], [0.0; 3], &p).horizontal;
            prop_assert!(e > 0.0);
            prop_assert!(e <= hover + 1e-12);
        }

        #[test]
        fn energy_never_increases(start in 0.0f64..2e4, c1 in 0.0f64..1e3, c2 in 0.0f64..1e3) {
            prop_assert!(apply_energy(start, &[c1, c2]) <= start);
        }
    }
}
