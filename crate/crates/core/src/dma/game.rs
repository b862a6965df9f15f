use rand::Rng;

use crate::config::SweepMode;
use crate::geometry::preference_order;

use super::{
    center_fallback, DecisionOutcome, Diagnostics, DmaError, SystemSnapshot, UtilityTable,
};

fn exchange_reads(snap: &SystemSnapshot<'_>) -> u64 {
    let n = snap.n_drones() as u64;
    let users: u64 = snap.all_users.iter().map(|u| u.len() as u64).sum();
    n * (n + users)
}

/// Angles for all drones: players take `choice`, the rest fall back.
fn assemble(
    snap: &SystemSnapshot<'_>,
    angles: &[f64],
    players: &[usize],
    choice: &[usize],
) -> (Vec<f64>, u32) {
    let t_m = snap.config().direction_update_s;
    let mut out = vec![0.0; snap.n_drones()];
    let mut fallback = 0;
    let mut slot = 0;
    for (n, a) in out.iter_mut().enumerate() {
        if players.get(slot) == Some(&n) {
            *a = angles[choice[slot]];
            slot += 1;
        } else {
            *a = center_fallback(&snap.poses[n], snap.grid.cell_center(n), angles, t_m);
            fallback += 1;
        }
    }
    (out, fallback)
}

/// Best-response dynamics over the transmitting drones.
///
/// Players start from uniformly random candidates. Each sweep lets every
/// player switch to its best reply, either all at once (synchronous) or one
/// after another in ascending order (sequential). Iteration stops at a fixed
/// point or after the configured number of sweeps, keeping the last profile.
pub fn decide_gt<R: Rng + ?Sized>(snap: &SystemSnapshot<'_>, rng: &mut R) -> DecisionOutcome {
    let cfg = snap.config();
    let angles = snap.candidate_angles();
    let pref = preference_order(&angles);
    let table = UtilityTable::build(snap, &angles);
    let players = table.players().to_vec();
    let mut choice: Vec<usize> = players
        .iter()
        .map(|_| rng.random_range(0..angles.len()))
        .collect();

    let mut sweeps = 0;
    let mut converged = false;
    while !players.is_empty() && sweeps < cfg.gt_max_sweeps {
        sweeps += 1;
        let changed = match cfg.gt_sweep_mode {
            SweepMode::Synchronous => {
                let next: Vec<usize> = (0..players.len())
                    .map(|s| table.best_response(s, &choice, &pref))
                    .collect();
                let changed = next != choice;
                choice = next;
                changed
            }
            SweepMode::Sequential => {
                let mut changed = false;
                for s in 0..players.len() {
                    let b = table.best_response(s, &choice, &pref);
                    if b != choice[s] {
                        choice[s] = b;
                        changed = true;
                    }
                }
                changed
            }
        };
        if !changed {
            converged = true;
            break;
        }
    }

    let (out, fallback) = assemble(snap, &angles, &players, &choice);
    DecisionOutcome {
        angles: out,
        hover: false,
        diagnostics: Diagnostics {
            gt_sweeps: sweeps,
            gt_converged: (!players.is_empty()).then_some(converged),
            opt_profiles: 0,
            position_reads: exchange_reads(snap),
            fallback_drones: fallback,
        },
    }
}

/// Exhaustive search for the joint profile maximising the mean path utility
/// of the transmitting drones. Among equal optima the profile that is
/// smallest in preference order, drone by drone, wins.
pub fn decide_opt(snap: &SystemSnapshot<'_>) -> Result<DecisionOutcome, DmaError> {
    let cfg = snap.config();
    let angles = snap.candidate_angles();
    let pref = preference_order(&angles);
    let g = angles.len();
    let p = snap.players().len();

    let required = (g as u128).checked_pow(p as u32).unwrap_or(u128::MAX);
    if required > cfg.opt_max_profiles as u128 {
        return Err(DmaError::InfeasibleSearch {
            required,
            budget: cfg.opt_max_profiles,
        });
    }

    let table = UtilityTable::build(snap, &angles);
    let players = table.players().to_vec();
    let mut ranks = vec![0usize; p];
    let mut choice: Vec<usize> = vec![pref[0]; p];
    let mut best = (f64::NEG_INFINITY, choice.clone());
    let mut evaluated = 0u64;
    'profiles: loop {
        evaluated += 1;
        if p > 0 {
            let sum: f64 = (0..p).map(|s| table.utility(s, &choice)).sum();
            let mean = sum / p as f64;
            if mean > best.0 {
                best = (mean, choice.clone());
            }
        }
        // Odometer over preference ranks, last drone fastest.
        for i in (0..p).rev() {
            ranks[i] += 1;
            if ranks[i] < g {
                choice[i] = pref[ranks[i]];
                continue 'profiles;
            }
            ranks[i] = 0;
            choice[i] = pref[0];
        }
        break;
    }

    let (out, fallback) = assemble(snap, &angles, &players, &best.1);
    Ok(DecisionOutcome {
        angles: out,
        hover: false,
        diagnostics: Diagnostics {
            gt_sweeps: 0,
            gt_converged: None,
            opt_profiles: evaluated,
            position_reads: exchange_reads(snap),
            fallback_drones: fallback,
        },
    })
}
