//! Time-varying 3D ocean current synthesized from Lamb-Oseen vortices.
//!
//! Each vortex contributes a horizontal swirl with a Gaussian-smoothed core
//! (finite velocity everywhere, ideal-vortex `delta / (2 pi d)` decay far out)
//! plus a Gaussian vertical component coupled through a conversion factor.
//! The field evolves quasi-statically: within a micro slot it is frozen, and
//! [`CurrentField::advance`] applies the closed-form self-similar evolution
//! (centers advect with the background flow, cores grow viscously) once per
//! slot boundary.
//!
//! Sign convention: both horizontal components carry a leading minus. The
//! resulting swirl is mirrored relative to a textbook counterclockwise
//! vortex; it is kept as-is rather than "corrected", and only the
//! decay/continuity structure is relied upon.

use crate::{norm3, Vec3};
use rand::Rng;

/// One Lamb-Oseen vortex.
#[derive(Debug, Clone, PartialEq)]
pub struct Vortex {
    /// Horizontal core center (m).
    pub center: [f64; 2],
    /// Core radius l (m), strictly positive.
    pub core_radius: f64,
    /// Peak vorticity scale beta; rescaled on core growth so that the
    /// circulation stays constant.
    pub strength_beta: f64,
    /// Circulation coefficient delta (m^2/s); drives the induced velocity.
    pub circulation_delta: f64,
    /// Vertical conversion factor rho (dimensionless).
    pub vertical_factor_rho: f64,
    /// Kinematic viscosity h (m^2/s) governing core growth.
    pub viscosity_h: f64,
}

impl Vortex {
    /// Horizontal induced velocity at a 2D point.
    ///
    /// At the core center the removable singularity evaluates to (0, 0).
    pub fn horizontal_velocity(&self, point: [f64; 2]) -> [f64; 2] {
        let dx = point[0] - self.center[0];
        let dy = point[1] - self.center[1];
        let dist_sq = dx * dx + dy * dy;
        if dist_sq == 0.0 {
            return [0.0, 0.0];
        }
        let l_sq = self.core_radius * self.core_radius;
        let bracket = 1.0 - (-dist_sq / l_sq).exp();
        let common = self.circulation_delta / (2.0 * std::f64::consts::PI * dist_sq) * bracket;
        [-common * dy, -common * dx]
    }

    /// Vertical induced velocity: a Gaussian bump of height
    /// `rho * delta / (2 pi l)` with length scale `sqrt(2 l)`.
    pub fn vertical_velocity(&self, point: [f64; 2]) -> f64 {
        let dx = point[0] - self.center[0];
        let dy = point[1] - self.center[1];
        let dist_sq = dx * dx + dy * dy;
        let l = self.core_radius;
        // det(2 pi Gamma)^(-1/2) with Gamma = diag(l, l); exponent -|r-rc|^2/(2l)
        self.vertical_factor_rho * self.circulation_delta / (2.0 * std::f64::consts::PI * l)
            * (-dist_sq / (2.0 * l)).exp()
    }
}

/// Sampling ranges for a randomly populated field.
#[derive(Debug, Clone, PartialEq)]
pub struct OceanParams {
    pub n_vortices: usize,
    /// Core radius range (m).
    pub core_radius_range: (f64, f64),
    /// Circulation range (m^2/s).
    pub circulation_range: (f64, f64),
    pub vertical_factor_rho: f64,
    pub viscosity_h: f64,
    /// Uniform background flow (m/s).
    pub background: Vec3,
    /// Hard cap on the returned current magnitude (m/s).
    pub max_speed: f64,
}

impl Default for OceanParams {
    fn default() -> Self {
        OceanParams {
            n_vortices: 3,
            core_radius_range: (20.0, 40.0),
            circulation_range: (5.0, 20.0),
            vertical_factor_rho: 0.05,
            viscosity_h: 1e-3,
            background: [0.1, 0.05, 0.0],
            max_speed: 1.5,
        }
    }
}

/// Superposition of vortices plus a uniform background flow.
///
/// Immutable between [`CurrentField::advance`] calls; concurrent queries are
/// safe.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentField {
    pub vortices: Vec<Vortex>,
    pub background: Vec3,
    pub max_speed: f64,
    /// Elapsed field time (s).
    pub time: f64,
}

impl CurrentField {
    /// Populates a field with vortex centers uniform over the horizontal
    /// extent of the arena.
    pub fn sample(
        params: &OceanParams,
        arena_min: Vec3,
        arena_max: Vec3,
        rng: &mut impl Rng,
    ) -> Self {
        let vortices = (0..params.n_vortices)
            .map(|_| Vortex {
                center: [
                    rng.random_range(arena_min[0]..=arena_max[0]),
                    rng.random_range(arena_min[1]..=arena_max[1]),
                ],
                core_radius: rng
                    .random_range(params.core_radius_range.0..=params.core_radius_range.1),
                strength_beta: 1.0,
                circulation_delta: rng
                    .random_range(params.circulation_range.0..=params.circulation_range.1),
                vertical_factor_rho: params.vertical_factor_rho,
                viscosity_h: params.viscosity_h,
            })
            .collect();
        CurrentField {
            vortices,
            background: params.background,
            max_speed: params.max_speed,
            time: 0.0,
        }
    }

    /// Total current at a 3D position, clamped to `max_speed`.
    pub fn current_at(&self, position: Vec3) -> Vec3 {
        let v = self.current_at_unclamped(position);
        let speed = norm3(v);
        if speed > self.max_speed {
            crate::scale3(v, self.max_speed / speed)
        } else {
            v
        }
    }

    /// Raw superposition without the magnitude clamp.
    pub fn current_at_unclamped(&self, position: Vec3) -> Vec3 {
        let point = [position[0], position[1]];
        let mut v = self.background;
        for vortex in &self.vortices {
            let [hx, hy] = vortex.horizontal_velocity(point);
            v[0] += hx;
            v[1] += hy;
            v[2] += vortex.vertical_velocity(point);
        }
        v
    }

    /// Advances the field by `dt`: centers advect with the horizontal
    /// background flow and cores grow as `l' = sqrt(l^2 + 4 h dt)`, with the
    /// vorticity scale rescaled so circulation is conserved.
    pub fn advance(&self, dt: f64) -> CurrentField {
        debug_assert!(dt > 0.0);
        let vortices = self
            .vortices
            .iter()
            .map(|v| {
                let l_new = (v.core_radius * v.core_radius + 4.0 * v.viscosity_h * dt).sqrt();
                Vortex {
                    center: [
                        v.center[0] + self.background[0] * dt,
                        v.center[1] + self.background[1] * dt,
                    ],
                    core_radius: l_new,
                    strength_beta: v.strength_beta * (v.core_radius * v.core_radius)
                        / (l_new * l_new),
                    ..*v
                }
            })
            .collect();
        CurrentField {
            vortices,
            background: self.background,
            max_speed: self.max_speed,
            time: self.time + dt,
        }
    }
}

/// Velocity of a vehicle relative to the surrounding water.
pub fn relative_velocity(thrust: Vec3, current: Vec3) -> Vec3 {
    crate::sub3(thrust, current)
}
