//! Drone mobility algorithms.
//!
//! At every direction update epoch each drone picks one turning angle from a
//! symmetric candidate set. All algorithms evaluate candidate arcs at a few
//! sample points with users frozen at their epoch-start positions. A drone
//! with no active user steers towards its cell center instead.

mod game;
mod heuristics;
mod table;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::LinkModel;
use crate::config::{Dma, ScenarioConfig};
use crate::geometry::{
    build_candidate_path, candidate_angles, max_turn_angle, preference_order, CandidatePath,
    CellGrid, DronePose, GroundPoint,
};
use crate::traffic::random_point;

pub use game::{decide_gt, decide_opt};
pub use heuristics::{decide_slr, decide_snr, SLR_LEAKAGE_FLOOR_WATT};
pub use table::UtilityTable;

/// Frozen system state handed to a decision.
#[derive(Debug, Clone)]
pub struct SystemSnapshot<'a> {
    pub time_s: f64,
    pub link: &'a LinkModel,
    pub grid: CellGrid,
    pub poses: Vec<DronePose>,
    /// Positions of the active users of each cell.
    pub active_users: Vec<Vec<GroundPoint>>,
    /// Positions of every user of each cell.
    pub all_users: Vec<Vec<GroundPoint>>,
}

impl<'a> SystemSnapshot<'a> {
    pub fn config(&self) -> &ScenarioConfig {
        self.link.config()
    }

    pub fn n_drones(&self) -> usize {
        self.poses.len()
    }

    /// A drone transmits iff its cell has an active user.
    pub fn is_transmitting(&self, n: usize) -> bool {
        !self.active_users[n].is_empty()
    }

    pub fn transmitting(&self) -> Vec<bool> {
        (0..self.n_drones())
            .map(|n| self.is_transmitting(n))
            .collect()
    }

    /// Drones with at least one active user, ascending.
    pub fn players(&self) -> Vec<usize> {
        (0..self.n_drones())
            .filter(|&n| self.is_transmitting(n))
            .collect()
    }

    /// Turning options shared by every drone in this snapshot, ascending.
    pub fn candidate_angles(&self) -> Vec<f64> {
        let c = self.config();
        let theta_max = max_turn_angle(
            c.drone_speed,
            c.max_accel,
            c.direction_update_s,
            c.theta_cap_rad,
        );
        candidate_angles(theta_max, c.n_candidates).expect("validated config")
    }

    pub fn path(&self, n: usize, theta: f64) -> CandidatePath {
        let c = self.config();
        build_candidate_path(&self.poses[n], theta, c.direction_update_s, c.path_samples)
    }

    /// Random state: drones inside their cells with random headings, users
    /// uniform in their cells and each active with probability `p_active`.
    pub fn random<R: Rng + ?Sized>(link: &'a LinkModel, rng: &mut R, p_active: f64) -> Self {
        let c = link.config();
        let grid = CellGrid::new(c.grid_side as usize, c.cell_edge);
        let mut poses = Vec::new();
        let mut active_users = Vec::new();
        let mut all_users = Vec::new();
        for cell in 0..grid.n_cells() {
            let b = grid.bounds(cell);
            let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            poses.push(DronePose::new(
                random_point(rng, &b),
                heading,
                c.drone_speed,
                c.drone_height,
            ));
            let users: Vec<GroundPoint> = (0..c.users_per_cell)
                .map(|_| random_point(rng, &b))
                .collect();
            active_users.push(
                users
                    .iter()
                    .copied()
                    .filter(|_| rng.random_bool(p_active))
                    .collect(),
            );
            all_users.push(users);
        }
        SystemSnapshot {
            time_s: 0.0,
            link,
            grid,
            poses,
            active_users,
            all_users,
        }
    }
}

/// Per-decision bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Best-response rounds run by GT.
    pub gt_sweeps: u32,
    /// `Some` for GT decisions with at least one player.
    pub gt_converged: Option<bool>,
    /// Joint profiles OPT evaluated.
    pub opt_profiles: u64,
    /// Position reads the algorithm's information exchange requires.
    pub position_reads: u64,
    /// Drones steered by the center fallback.
    pub fallback_drones: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    /// Committed angle per drone; ignored when `hover` is set.
    pub angles: Vec<f64>,
    /// Drones stay pinned at their cell centers.
    pub hover: bool,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmaError {
    #[error("drone {drone} has no active users")]
    NoActiveUsers { drone: usize },
    #[error("exhaustive search needs {required} profiles, budget is {budget}")]
    InfeasibleSearch { required: u128, budget: u64 },
}

/// Runs the configured algorithm.
pub fn decide<R: Rng + ?Sized>(
    dma: Dma,
    snap: &SystemSnapshot<'_>,
    rng: &mut R,
) -> Result<DecisionOutcome, DmaError> {
    match dma {
        Dma::Hov => Ok(decide_hov(snap)),
        Dma::Snr => Ok(decide_snr(snap)),
        Dma::Slr => Ok(decide_slr(snap)),
        Dma::Gt => Ok(decide_gt(snap, rng)),
        Dma::Opt => decide_opt(snap),
    }
}

/// Baseline: every drone hovers at its cell center.
pub fn decide_hov(snap: &SystemSnapshot<'_>) -> DecisionOutcome {
    DecisionOutcome {
        angles: vec![0.0; snap.n_drones()],
        hover: true,
        diagnostics: Diagnostics::default(),
    }
}

/// Candidate whose arc ends closest to `cell_center`; ties favour the
/// smaller turn, then the negative one.
pub fn center_fallback(
    pose: &DronePose,
    cell_center: GroundPoint,
    candidates: &[f64],
    t_m: f64,
) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for i in preference_order(candidates) {
        let end = build_candidate_path(pose, candidates[i], t_m, 1)
            .end_pose
            .position;
        let d = end.distance(cell_center);
        if d < best.0 {
            best = (d, candidates[i]);
        }
    }
    best.1
}

/// Mean spectral efficiency of drone `n`'s cell along its arc, with every
/// transmitting drone flying the arc `profile` assigns it.
///
/// At each sample offset all drones sit at their own sample for that offset
/// and users stay at their snapshot positions.
pub fn path_utility_se(
    n: usize,
    profile: &[f64],
    snap: &SystemSnapshot<'_>,
) -> Result<f64, DmaError> {
    let users = &snap.active_users[n];
    if users.is_empty() {
        return Err(DmaError::NoActiveUsers { drone: n });
    }
    let link = snap.link;
    let kappa = link.interference_range();
    let noise = link.noise();
    let paths: Vec<Option<CandidatePath>> = (0..snap.n_drones())
        .map(|i| snap.is_transmitting(i).then(|| snap.path(i, profile[i])))
        .collect();
    let own = paths[n].as_ref().expect("transmitting");
    let k = own.samples.len();
    let mut total = 0.0;
    for s in 0..k {
        let mut cell = 0.0;
        for &u in users {
            let gains = link.gains(u.distance(own.samples[s].1));
            let mut interference = 0.0;
            for (i, p) in paths.iter().enumerate() {
                if i == n {
                    continue;
                }
                if let Some(p) = p {
                    let r = u.distance(p.samples[s].1);
                    if r <= kappa {
                        interference += link.expected_power(r);
                    }
                }
            }
            cell += gains.se(interference + noise);
        }
        total += cell / users.len() as f64;
    }
    Ok(total / k as f64)
}

/// Mean of [`path_utility_se`] over all transmitting drones; `None` when no
/// drone transmits.
pub fn system_path_utility(profile: &[f64], snap: &SystemSnapshot<'_>) -> Option<f64> {
    let players = snap.players();
    if players.is_empty() {
        return None;
    }
    let sum: f64 = players
        .iter()
        .map(|&n| path_utility_se(n, profile, snap).expect("player"))
        .sum();
    Some(sum / players.len() as f64)
}
