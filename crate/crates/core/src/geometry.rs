//! Cell grid layout, distances and constant-speed turning kinematics.
//!
//! A drone flies at constant linear speed `v` and commits to a total turn
//! `theta` over each direction update interval `t_m`. A non-zero turn puts
//! the drone on a circular arc of radius `v * t_m / |theta|`; positive
//! angles turn counter-clockwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundPoint {
    pub x: f64,
    pub y: f64,
}

impl GroundPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        GroundPoint { x, y }
    }

    pub fn distance(self, other: GroundPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Axis-aligned rectangle, inclusive on every side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: GroundPoint,
    pub max: GroundPoint,
}

impl Rect {
    pub fn contains(&self, p: GroundPoint) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn center(&self) -> GroundPoint {
        GroundPoint::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }
}

/// Square grid of `side * side` square cells. Cell `i` sits at row
/// `i / side`, column `i % side`, counted from `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    pub side: usize,
    pub edge: f64,
    pub origin: GroundPoint,
}

impl CellGrid {
    pub fn new(side: usize, edge: f64) -> Self {
        CellGrid {
            side,
            edge,
            origin: GroundPoint::default(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.side * self.side
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.side + col
    }

    pub fn row_col(&self, cell: usize) -> (usize, usize) {
        (cell / self.side, cell % self.side)
    }

    /// Index of the middle cell. Only meaningful for odd `side`.
    pub fn center_cell(&self) -> usize {
        (self.n_cells() - 1) / 2
    }

    pub fn bounds(&self, cell: usize) -> Rect {
        let (row, col) = self.row_col(cell);
        let min = GroundPoint::new(
            self.origin.x + col as f64 * self.edge,
            self.origin.y + row as f64 * self.edge,
        );
        Rect {
            min,
            max: GroundPoint::new(min.x + self.edge, min.y + self.edge),
        }
    }

    pub fn cell_center(&self, cell: usize) -> GroundPoint {
        let (row, col) = self.row_col(cell);
        GroundPoint::new(
            self.origin.x + (col as f64 + 0.5) * self.edge,
            self.origin.y + (row as f64 + 0.5) * self.edge,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DronePose {
    pub position: GroundPoint,
    /// Radians in (-pi, pi].
    pub heading: f64,
    pub speed: f64,
    pub height: f64,
}

impl DronePose {
    pub fn new(position: GroundPoint, heading: f64, speed: f64, height: f64) -> Self {
        DronePose {
            position,
            heading: wrap_angle(heading),
            speed,
            height,
        }
    }
}

/// A constant-speed arc the drone may commit to for one update interval.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePath {
    pub theta: f64,
    /// `(time offset, position)` pairs, start excluded and endpoint included.
    pub samples: Vec<(f64, GroundPoint)>,
    pub end_pose: DronePose,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("time offset {dt} outside [0, {t_m}]")]
    Domain { dt: f64, t_m: f64 },
}

/// Maps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// 2D distance between a ground point and the drone's ground projection.
pub fn ground_distance(u: GroundPoint, p: &DronePose) -> f64 {
    u.distance(p.position)
}

pub fn euclidean_distance(r: f64, h: f64) -> f64 {
    (r * r + h * h).sqrt()
}

/// Elevation angle of the link in degrees; exactly 90 when overhead.
pub fn elevation_angle_deg(r: f64, h: f64) -> f64 {
    if r == 0.0 {
        90.0
    } else {
        (h / r).atan().to_degrees()
    }
}

/// Largest total turn reachable in one interval under the acceleration
/// limit, `min(a_max * t_m / v, cap)`.
pub fn max_turn_angle(v: f64, a_max: f64, t_m: f64, cap: f64) -> f64 {
    (a_max * t_m / v).min(cap)
}

/// The `count` evenly spaced turning options in `[-theta_max, theta_max]`,
/// ascending. The middle entry is exactly zero and the ends are exactly
/// `+-theta_max`.
pub fn candidate_angles(theta_max: f64, count: u32) -> Result<Vec<f64>, ConfigError> {
    if count < 3 || count.is_multiple_of(2) {
        return Err(ConfigError::single(
            "n_candidates",
            "n_candidates must be odd and >= 3",
        ));
    }
    let half = (count as i64 - 1) / 2;
    let step = 2.0 * theta_max / (count as f64 - 1.0);
    Ok((-half..=half)
        .map(|i| match i {
            0 => 0.0,
            i if i == half => theta_max,
            i if i == -half => -theta_max,
            i => i as f64 * step,
        })
        .collect())
}

/// Preference rank of a turning angle for deterministic tie-breaking:
/// smaller magnitude first, negative before positive.
pub fn angle_preference(a: f64, b: f64) -> std::cmp::Ordering {
    a.abs()
        .total_cmp(&b.abs())
        .then_with(|| (a > 0.0).cmp(&(b > 0.0)))
}

/// Indices of `angles` sorted by [`angle_preference`].
pub fn preference_order(angles: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..angles.len()).collect();
    idx.sort_by(|&i, &j| angle_preference(angles[i], angles[j]));
    idx
}

/// Pose after flying `dt` seconds along the arc that turns by `theta` over
/// a full interval of `t_m`.
pub fn arc_advance(
    p: &DronePose,
    theta: f64,
    dt: f64,
    t_m: f64,
) -> Result<DronePose, GeometryError> {
    if !(0.0..=t_m).contains(&dt) {
        return Err(GeometryError::Domain { dt, t_m });
    }
    Ok(arc_advance_unchecked(p, theta, dt, t_m))
}

fn arc_advance_unchecked(p: &DronePose, theta: f64, dt: f64, t_m: f64) -> DronePose {
    let (sin_h, cos_h) = p.heading.sin_cos();
    if theta == 0.0 {
        let s = p.speed * dt;
        return DronePose {
            position: GroundPoint::new(p.position.x + s * cos_h, p.position.y + s * sin_h),
            ..*p
        };
    }
    // Rotation by `phi` about a center `radius` to the turn side, written in
    // the chord form so tiny turns keep full precision.
    let phi = theta * dt / t_m;
    let radius = p.speed * t_m / theta.abs();
    let (sin_phi, _) = phi.sin_cos();
    let half = (0.5 * phi).sin();
    let forward = radius * sin_phi.abs();
    let lateral = theta.signum() * 2.0 * radius * half * half;
    DronePose {
        position: GroundPoint::new(
            p.position.x + forward * cos_h - lateral * sin_h,
            p.position.y + forward * sin_h + lateral * cos_h,
        ),
        heading: wrap_angle(p.heading + phi),
        ..*p
    }
}

/// Samples the arc for `theta` at `j * t_m / k` for `j = 1..=k`.
pub fn build_candidate_path(p: &DronePose, theta: f64, t_m: f64, k: u32) -> CandidatePath {
    let samples = (1..=k)
        .map(|j| {
            let dt = if j == k {
                t_m
            } else {
                j as f64 * t_m / k as f64
            };
            (dt, arc_advance_unchecked(p, theta, dt, t_m).position)
        })
        .collect();
    CandidatePath {
        theta,
        samples,
        end_pose: arc_advance_unchecked(p, theta, t_m, t_m),
    }
}
