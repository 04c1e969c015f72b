//! Task pipeline: detection radii, greedy sub-target placement, coverage,
//! phase delays and the collaboration efficiency objective.
//!
//! A task is a rectangle to explore. Selected AUVs get non-overlapping circular
//! sub-targets inside it (greedy placement, largest radius first), travel
//! there, sweep their disc and upload the samples. The task time is set by the
//! slowest vehicle and the efficiency is coverage over task time.

use crate::Vec3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// Propagation speed of sound in water (m/s).
pub const SOUND_SPEED_M_S: f64 = 1500.0;

#[derive(Debug, Error, PartialEq)]
pub enum TaskingError {
    #[error("task time is undefined for an empty selection")]
    EmptySelection,
}

/// One rectangular exploration task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    /// Center of the rectangle (m, arena frame).
    pub center: Vec3,
    /// Rectangle extent along x (m).
    pub length_l: f64,
    /// Rectangle extent along y (m).
    pub width_w: f64,
    /// Instruction payload distributed to each participant (bits).
    pub instruction_bits: f64,
    /// Sample density collected per covered square meter (bits/m^2).
    pub sample_bits_per_m2: f64,
    /// Sonar beam angle (rad).
    pub sonar_beam_theta: f64,
}

impl TaskSpec {
    pub fn area(&self) -> f64 {
        self.length_l * self.width_w
    }

    /// Upload payload for a disc of the given radius (bits).
    pub fn upload_bits(&self, radius_m: f64) -> f64 {
        self.sample_bits_per_m2 * std::f64::consts::PI * radius_m * radius_m
    }

    /// Arena coordinates of a point given in rectangle-local coordinates
    /// (origin at the rectangle's lower-left corner).
    pub fn local_to_arena(&self, local: [f64; 2]) -> Vec3 {
        [
            self.center[0] - self.length_l / 2.0 + local[0],
            self.center[1] - self.width_w / 2.0 + local[1],
            self.center[2],
        ]
    }
}

/// Detection radius from computing ability: `r_b + mu * ln(1 + c / c_ref)`.
pub fn detection_radius(compute_c: f64, base_radius: f64, mu: f64, compute_ref: f64) -> f64 {
    debug_assert!(compute_c >= 0.0 && compute_ref > 0.0);
    base_radius + mu * (1.0 + compute_c / compute_ref).ln()
}

/// Summed-disc coverage proxy, clamped to 1.
///
/// Only selected vehicles count. The clamp keeps the efficiency objective
/// bounded when discs overlap or exceed the rectangle.
pub fn coverage_ratio(selected: &[bool], radii: &[f64], length_l: f64, width_w: f64) -> f64 {
    debug_assert!(length_l > 0.0 && width_w > 0.0);
    let covered: f64 = selected
        .iter()
        .zip(radii)
        .filter(|(&g, _)| g)
        .map(|(_, &r)| std::f64::consts::PI * r * r)
        .sum();
    (covered / (length_l * width_w)).min(1.0)
}

/// Result of the greedy sub-target placement, in rectangle-local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Disc centers, aligned with the input radii order.
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    /// Set when any disc could not be placed without overlap (or did not fit
    /// at all) and the best candidate seen was used instead.
    pub best_effort: bool,
}

/// Greedily places non-overlapping discs inside an `l x w` rectangle.
///
/// Radii are processed in descending order. Candidates are drawn from a
/// per-axis normal centered on the rectangle with standard deviation one sixth
/// of the respective side, clamped to the feasible box `[r, side - r]`. A
/// candidate is accepted when its distance to every accepted center is at
/// least the sum of the radii; after `max_attempts` rejected draws the
/// candidate with the largest minimum separation slack is used and
/// `best_effort` is set. A disc with `2 r > min(l, w)` cannot fit and is
/// pinned to the rectangle center, also setting `best_effort`.
pub fn assign_subtargets(
    radii: &[f64],
    length_l: f64,
    width_w: f64,
    rng: &mut impl Rng,
    max_attempts: usize,
) -> Placement {
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[b].partial_cmp(&radii[a]).expect("finite radii"));

    let mut centers = vec![[0.0, 0.0]; radii.len()];
    let mut accepted: Vec<(usize, [f64; 2])> = Vec::with_capacity(radii.len());
    let mut best_effort = false;

    for &idx in &order {
        let r = radii[idx];
        if 2.0 * r > length_l.min(width_w) {
            let c = [length_l / 2.0, width_w / 2.0];
            centers[idx] = c;
            accepted.push((idx, c));
            best_effort = true;
            continue;
        }
        let nx = Normal::new(length_l / 2.0, length_l / 6.0).expect("positive std");
        let ny = Normal::new(width_w / 2.0, width_w / 6.0).expect("positive std");
        let slack = |c: [f64; 2]| -> f64 {
            accepted
                .iter()
                .map(|&(j, cj)| {
                    let d = ((c[0] - cj[0]).powi(2) + (c[1] - cj[1]).powi(2)).sqrt();
                    d - (r + radii[j])
                })
                .fold(f64::INFINITY, f64::min)
        };
        let mut best: Option<([f64; 2], f64)> = None;
        let mut placed = false;
        for _ in 0..max_attempts.max(1) {
            let c = [
                nx.sample(rng).clamp(r, length_l - r),
                ny.sample(rng).clamp(r, width_w - r),
            ];
            let s = slack(c);
            if s >= 0.0 {
                centers[idx] = c;
                accepted.push((idx, c));
                placed = true;
                break;
            }
            if best.map_or(true, |(_, bs)| s > bs) {
                best = Some((c, s));
            }
        }
        if !placed {
            let (c, _) = best.expect("at least one candidate drawn");
            centers[idx] = c;
            accepted.push((idx, c));
            best_effort = true;
        }
    }

    Placement {
        centers,
        radii: radii.to_vec(),
        best_effort,
    }
}

impl Placement {
    /// True when every pair of discs is separated by at least the sum of the
    /// radii and every center lies in its feasible box.
    pub fn is_conflict_free(&self, length_l: f64, width_w: f64) -> bool {
        for (i, (&c, &r)) in self.centers.iter().zip(&self.radii).enumerate() {
            if c[0] < r || c[0] > length_l - r || c[1] < r || c[1] > width_w - r {
                return false;
            }
            for j in 0..i {
                let cj = self.centers[j];
                let d = ((c[0] - cj[0]).powi(2) + (c[1] - cj[1]).powi(2)).sqrt();
                if d < r + self.radii[j] - 1e-9 {
                    return false;
                }
            }
        }
        true
    }
}

/// Per-AUV delay breakdown for one macro task (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDelays {
    /// Instruction distribution: transmission plus propagation.
    pub distribution: f64,
    /// Travel time to the sub-target (slot count times slot duration).
    pub movement: f64,
    /// Sweep time of the detection disc.
    pub detection: f64,
    /// Sample upload: transmission plus propagation.
    pub upload: f64,
    /// Whether the vehicle reached its sub-target within the micro budget.
    pub arrived: bool,
}

impl PhaseDelays {
    pub fn total(&self) -> f64 {
        self.distribution + self.movement + self.detection + self.upload
    }
}

/// Inputs for one vehicle's delay computation.
#[derive(Debug, Clone, Copy)]
pub struct PhaseInputs {
    pub radius_m: f64,
    /// Link rate to the central AUV in the first micro slot (bits/s).
    pub distribution_rate_bps: f64,
    /// Distance to the central AUV at task start (m).
    pub distribution_distance_m: f64,
    /// Link rate to the central AUV at fusion time (bits/s).
    pub upload_rate_bps: f64,
    /// Distance to the central AUV at fusion time (m).
    pub upload_distance_m: f64,
    /// First micro slot (1-based) whose end position is within the detection
    /// radius of the sub-target, if any.
    pub arrival_slot: Option<usize>,
}

/// Delay-model options.
#[derive(Debug, Clone, Copy)]
pub struct DelayConfig {
    pub slot_dt: f64,
    pub micro_budget: usize,
    /// Keep the printed `v_s / d` propagation form instead of `d / v_s`.
    pub paper_literal_delays: bool,
    /// Upper bound on any single transmission time (s); a zero or
    /// pathologically slow link charges this instead of an unbounded delay.
    /// Callers pass the micro budget duration.
    pub stall_cap_s: f64,
}

fn propagation_delay(distance_m: f64, literal: bool) -> f64 {
    let d = distance_m.max(crate::acoustics::MIN_DISTANCE_M);
    if literal {
        SOUND_SPEED_M_S / d
    } else {
        d / SOUND_SPEED_M_S
    }
}

fn transmission_delay(bits: f64, rate_bps: f64, cap_s: f64) -> f64 {
    if bits <= 0.0 {
        0.0
    } else if rate_bps <= 0.0 {
        cap_s
    } else {
        (bits / rate_bps).min(cap_s)
    }
}

/// Delay breakdown for one vehicle.
///
/// Vehicles that never arrive are charged the full movement budget and no
/// detection/upload time (they have nothing to sweep or send).
pub fn phase_delays(task: &TaskSpec, inputs: &PhaseInputs, cfg: &DelayConfig) -> PhaseDelays {
    let distribution = transmission_delay(
        task.instruction_bits,
        inputs.distribution_rate_bps,
        cfg.stall_cap_s,
    ) + propagation_delay(inputs.distribution_distance_m, cfg.paper_literal_delays);

    let (movement, arrived) = match inputs.arrival_slot {
        Some(slot) => (slot as f64 * cfg.slot_dt, true),
        None => (cfg.micro_budget as f64 * cfg.slot_dt, false),
    };

    let (detection, upload) = if arrived {
        let chord = 2.0 * inputs.radius_m * (task.sonar_beam_theta / 2.0).sin();
        let sweep = 2.0 * std::f64::consts::PI / chord;
        let up = transmission_delay(
            task.upload_bits(inputs.radius_m),
            inputs.upload_rate_bps,
            cfg.stall_cap_s,
        ) + propagation_delay(inputs.upload_distance_m, cfg.paper_literal_delays);
        (sweep, up)
    } else {
        (0.0, 0.0)
    };

    PhaseDelays {
        distribution,
        movement,
        detection,
        upload,
        arrived,
    }
}

/// Task time (slowest selected vehicle) and efficiency `zeta / T_task`.
pub fn task_time_and_efficiency(
    delays: &[PhaseDelays],
    coverage: f64,
) -> Result<(f64, f64), TaskingError> {
    if delays.is_empty() {
        return Err(TaskingError::EmptySelection);
    }
    let t_task = delays.iter().map(PhaseDelays::total).fold(0.0, f64::max);
    Ok((t_task, coverage / t_task))
}
