use crate::geometry::{preference_order, GroundPoint};

use super::{center_fallback, DecisionOutcome, Diagnostics, SystemSnapshot};

/// Leakage floor used when no foreign user is exposed.
pub const SLR_LEAKAGE_FLOOR_WATT: f64 = 1e-30;

/// Per-drone argmax of `score(n, theta)` over the candidate set, with the
/// center fallback for idle drones.
fn per_drone(
    snap: &SystemSnapshot<'_>,
    reads: u64,
    mut score: impl FnMut(usize, f64) -> f64,
) -> DecisionOutcome {
    let angles = snap.candidate_angles();
    let pref = preference_order(&angles);
    let t_m = snap.config().direction_update_s;
    let mut fallback = 0;
    let out = (0..snap.n_drones())
        .map(|n| {
            if !snap.is_transmitting(n) {
                fallback += 1;
                return center_fallback(&snap.poses[n], snap.grid.cell_center(n), &angles, t_m);
            }
            let mut best = (f64::NEG_INFINITY, angles[pref[0]]);
            for &c in &pref {
                let s = score(n, angles[c]);
                if s > best.0 {
                    best = (s, angles[c]);
                }
            }
            best.1
        })
        .collect();
    DecisionOutcome {
        angles: out,
        hover: false,
        diagnostics: Diagnostics {
            position_reads: reads,
            fallback_drones: fallback,
            ..Default::default()
        },
    }
}

/// Each drone maximises the mean signal-to-noise ratio of its own active
/// users along the arc, ignoring everyone else.
pub fn decide_snr(snap: &SystemSnapshot<'_>) -> DecisionOutcome {
    let link = snap.link;
    let noise = link.noise();
    let reads = snap.active_users.iter().map(|q| q.len() as u64).sum();
    per_drone(snap, reads, |n, theta| {
        let path = snap.path(n, theta);
        let users = &snap.active_users[n];
        let mut total = 0.0;
        for &(_, p) in &path.samples {
            let s: f64 = users
                .iter()
                .map(|u| link.expected_power(u.distance(p)) / noise)
                .sum();
            total += s / users.len() as f64;
        }
        total / path.samples.len() as f64
    })
}

/// Each drone maximises the mean signal-to-leakage ratio of its own active
/// users. Leakage is the power the drone puts on the active users of
/// neighbouring cells whose drones are within interference range.
pub fn decide_slr(snap: &SystemSnapshot<'_>) -> DecisionOutcome {
    let link = snap.link;
    let kappa = link.interference_range();
    let n_drones = snap.n_drones() as u64;
    let reads = n_drones
        * snap
            .active_users
            .iter()
            .map(|q| q.len() as u64)
            .sum::<u64>();
    per_drone(snap, reads, |n, theta| {
        let here = snap.poses[n].position;
        let exposed: Vec<GroundPoint> = (0..snap.n_drones())
            .filter(|&j| j != n && snap.poses[j].position.distance(here) <= kappa)
            .flat_map(|j| snap.active_users[j].iter().copied())
            .collect();
        let path = snap.path(n, theta);
        let users = &snap.active_users[n];
        let mut total = 0.0;
        for &(_, p) in &path.samples {
            let leak: f64 = exposed
                .iter()
                .map(|v| link.expected_power(v.distance(p)))
                .sum();
            let leak = leak.max(SLR_LEAKAGE_FLOOR_WATT);
            let s: f64 = users
                .iter()
                .map(|u| link.expected_power(u.distance(p)) / leak)
                .sum();
            total += s / users.len() as f64;
        }
        total / path.samples.len() as f64
    })
}
