//! Simulation core for covert multi-AUV cooperative target detection.
//!
//! The crate models a 3D underwater arena in which a central AUV dispatches a
//! team of worker AUVs to explore rectangular target regions while a passive
//! eavesdropper listens. It bundles:
//!
//! - [`acoustics`] — Thorp absorption, spreading loss, ambient noise, link rates
//! - [`covertness`] — energy-detector / LRT equivalence and the Gaussian KL bound
//! - [`ocean`] — Lamb-Oseen vortex current fields
//! - [`vehicle`] — AUV kinematics and the propulsion/detection/upload energy ledger
//! - [`tasking`] — detection radii, greedy sub-target placement, delays, efficiency
//! - [`env`] — the two-timescale macro/micro decision environment
//! - [`rl`] — dense networks, PPO/MAPPO machinery and the hierarchical trainer
//!
//! Everything is deterministic given a seed: all randomness flows through
//! explicitly seeded ChaCha generators (see [`seeding`]).

pub mod acoustics;
pub mod covertness;
pub mod env;
pub mod ocean;
pub mod rl;
pub mod seeding;
pub mod tasking;
pub mod vehicle;

/// 3D vector alias used throughout the simulator (meters / meters-per-second).
pub type Vec3 = [f64; 3];

/// Euclidean norm of a 3D vector.
pub fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Componentwise difference `a - b`.
pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Componentwise sum `a + b`.
pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Scalar multiple `s * v`.
pub fn scale3(v: Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

/// Distance between two points.
pub fn dist3(a: Vec3, b: Vec3) -> f64 {
    norm3(sub3(a, b))
}

/// Rescales `v` onto the closed ball of radius `max_norm` (no-op when inside).
pub fn clamp_norm3(v: Vec3, max_norm: f64) -> Vec3 {
    let n = norm3(v);
    if n > max_norm && n > 0.0 {
        scale3(v, max_norm / n)
    } else {
        v
    }
}
