//! Per-user traffic and random-waypoint ground mobility.
//!
//! Each user alternates between an exponentially distributed reading gap and
//! the download of one fixed-size packet. Independently of that, the user
//! walks between uniformly drawn waypoints inside its home cell.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GroundPoint, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrafficState {
    Reading {
        remaining_s: f64,
    },
    Active {
        remaining_bits: f64,
        elapsed_s: f64,
        /// Slot boundary at which the download began.
        started_s: f64,
    },
}

impl TrafficState {
    pub fn is_active(&self) -> bool {
        matches!(self, TrafficState::Active { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub position: GroundPoint,
    pub waypoint: GroundPoint,
    pub move_speed: f64,
    pub pause_remaining_s: f64,
    pub traffic: TrafficState,
    pub home_cell: usize,
}

/// One completed download.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub user: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub tau_s: f64,
    pub bits: f64,
}

impl PacketRecord {
    pub fn throughput_bps(&self) -> f64 {
        self.bits / self.tau_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficEvent {
    RequestStarted { user: usize, at_s: f64 },
    RequestCompleted(PacketRecord),
}

/// Result of one traffic step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrafficStep {
    pub events: Vec<TrafficEvent>,
    /// Bits of `delivered_bits` actually credited to the download.
    pub consumed_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrafficError {
    #[error("user {user}: {delivered} bits delivered while reading")]
    ContractViolation { user: usize, delivered: f64 },
}

/// Mobility and traffic parameters a user needs to step itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserParams {
    pub mean_reading_s: f64,
    pub packet_bits: f64,
    pub speed_range: [f64; 2],
    pub pause_range: [f64; 2],
}

impl UserParams {
    pub fn from_config(c: &crate::config::ScenarioConfig) -> Self {
        UserParams {
            mean_reading_s: c.mean_reading_s,
            packet_bits: c.packet_bits,
            speed_range: c.rwp_speed_range,
            pause_range: c.rwp_pause_range,
        }
    }
}

/// Exponential reading time with mean `lambda_s`.
pub fn draw_reading_time<R: Rng + ?Sized>(rng: &mut R, lambda_s: f64) -> f64 {
    Exp::new(1.0 / lambda_s).expect("positive mean").sample(rng)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Uniform point inside `bounds`.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, bounds: &Rect) -> GroundPoint {
    GroundPoint::new(
        uniform(rng, [bounds.min.x, bounds.max.x]),
        uniform(rng, [bounds.min.y, bounds.max.y]),
    )
}

impl UserState {
    /// Fresh user at a uniform position, heading to a uniform waypoint, in
    /// the reading state.
    pub fn spawn<R: Rng + ?Sized>(
        home_cell: usize,
        bounds: &Rect,
        params: &UserParams,
        motion_rng: &mut R,
        traffic_rng: &mut R,
    ) -> Self {
        UserState {
            position: random_point(motion_rng, bounds),
            waypoint: random_point(motion_rng, bounds),
            move_speed: uniform(motion_rng, params.speed_range),
            pause_remaining_s: 0.0,
            traffic: TrafficState::Reading {
                remaining_s: draw_reading_time(traffic_rng, params.mean_reading_s),
            },
            home_cell,
        }
    }
}

/// Advances the traffic state machine of `user` by one slot `[now_s, now_s + dt)`.
///
/// A reading gap that expires inside the slot starts the download at the next
/// slot boundary. An active download is credited `delivered_bits` and ages by
/// `dt`; once nothing remains it completes with `tau = elapsed` and a new
/// reading gap is drawn.
pub fn step_traffic<R: Rng + ?Sized>(
    user_id: usize,
    state: &mut TrafficState,
    now_s: f64,
    dt: f64,
    delivered_bits: f64,
    params: &UserParams,
    rng: &mut R,
) -> Result<TrafficStep, TrafficError> {
    let mut out = TrafficStep::default();
    match *state {
        TrafficState::Reading { remaining_s } => {
            if delivered_bits > 0.0 {
                return Err(TrafficError::ContractViolation {
                    user: user_id,
                    delivered: delivered_bits,
                });
            }
            let left = remaining_s - dt;
            if left <= 0.0 {
                let at_s = now_s + dt;
                *state = TrafficState::Active {
                    remaining_bits: params.packet_bits,
                    elapsed_s: 0.0,
                    started_s: at_s,
                };
                out.events.push(TrafficEvent::RequestStarted {
                    user: user_id,
                    at_s,
                });
            } else {
                *state = TrafficState::Reading { remaining_s: left };
            }
        }
        TrafficState::Active {
            remaining_bits,
            elapsed_s,
            started_s,
        } => {
            let consumed = delivered_bits.min(remaining_bits);
            out.consumed_bits = consumed;
            let remaining = remaining_bits - delivered_bits;
            let elapsed = elapsed_s + dt;
            if remaining <= 0.0 {
                out.events
                    .push(TrafficEvent::RequestCompleted(PacketRecord {
                        user: user_id,
                        start_s: started_s,
                        end_s: started_s + elapsed,
                        tau_s: elapsed,
                        bits: params.packet_bits,
                    }));
                *state = TrafficState::Reading {
                    remaining_s: draw_reading_time(rng, params.mean_reading_s),
                };
            } else {
                *state = TrafficState::Active {
                    remaining_bits: remaining,
                    elapsed_s: elapsed,
                    started_s,
                };
            }
        }
    }
    Ok(out)
}

/// Random-waypoint motion over `dt`. Arrivals consume exactly the time needed
/// to reach the waypoint, after which the pause and the next leg are drawn.
pub fn step_user_motion<R: Rng + ?Sized>(
    user: &mut UserState,
    dt: f64,
    bounds: &Rect,
    params: &UserParams,
    rng: &mut R,
) {
    let mut left = dt;
    // Bounded so a degenerate zero-length leg can never spin forever.
    for _ in 0..64 {
        if left <= 0.0 {
            break;
        }
        if user.pause_remaining_s > 0.0 {
            let take = user.pause_remaining_s.min(left);
            user.pause_remaining_s -= take;
            left -= take;
            continue;
        }
        let dist = user.position.distance(user.waypoint);
        let reach = user.move_speed * left;
        if reach < dist {
            let f = reach / dist;
            user.position = GroundPoint::new(
                user.position.x + f * (user.waypoint.x - user.position.x),
                user.position.y + f * (user.waypoint.y - user.position.y),
            );
            break;
        }
        left -= dist / user.move_speed;
        user.position = user.waypoint;
        user.pause_remaining_s = uniform(rng, params.pause_range);
        user.waypoint = random_point(rng, bounds);
        user.move_speed = uniform(rng, params.speed_range);
    }
}
