//! Air-to-ground link model and spectral-efficiency aggregation.
//!
//! The line-of-sight state of a link is random with a probability set by its
//! elevation angle. Received power, interference and the per-user spectral
//! efficiency are expectations over that state.
//!
//! Closed-form helpers implement each formula directly. [`LinkModel`] bundles
//! them for the hot loops and can optionally serve gains from a radial table.

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::geometry::{
    elevation_angle_deg, euclidean_distance, ground_distance, DronePose, GroundPoint,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathKind {
    Los,
    Nlos,
}

/// Probability of a line-of-sight link at elevation `omega_deg`.
pub fn los_probability(omega_deg: f64, alpha: f64, beta: f64) -> f64 {
    1.0 / (1.0 + alpha * (-beta * (omega_deg - alpha)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub db: f64,
    /// Set when the distance was below the 1 m reference and got clamped.
    pub clamped: bool,
}

/// Log-distance path loss, anchored at 1 m. Shorter distances clamp to 1 m.
pub fn path_loss_db(d: f64, path: PathKind, config: &ScenarioConfig) -> PathLoss {
    let (a, gamma) = match path {
        PathKind::Los => (config.a_los_db, config.gamma_los),
        PathKind::Nlos => (config.a_nlos_db, config.gamma_nlos),
    };
    let clamped = d < 1.0;
    let d = d.max(1.0);
    PathLoss {
        db: a + 10.0 * gamma * d.log10(),
        clamped,
    }
}

/// Power received on `b_u` Hz of the band from a drone `d` meters away.
pub fn received_power_watt(b_u: f64, d: f64, path: PathKind, config: &ScenarioConfig) -> f64 {
    let loss = path_loss_db(d, path, config).db;
    (b_u / config.bandwidth_hz) * config.tx_power_watt * 10f64.powf(-loss / 10.0)
}

/// Thermal noise plus receiver noise figure over `b_u` Hz.
pub fn noise_power_watt(b_u: f64, delta_ue_db: f64) -> f64 {
    10f64.powf((-174.0 + delta_ue_db) / 10.0) * b_u * 1e-3
}

/// Serving powers, interference and noise seen by one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub p_los: f64,
    pub s_los_watt: f64,
    pub s_nlos_watt: f64,
    pub interference_watt: f64,
    pub noise_watt: f64,
}

impl LinkBudget {
    pub fn sinr(&self, path: PathKind) -> f64 {
        let s = match path {
            PathKind::Los => self.s_los_watt,
            PathKind::Nlos => self.s_nlos_watt,
        };
        s / (self.interference_watt + self.noise_watt)
    }
}

/// Expected Shannon spectral efficiency over the LoS/NLoS mixture.
pub fn expected_user_se(budget: &LinkBudget) -> f64 {
    expected_se(
        budget.p_los,
        budget.s_los_watt,
        budget.s_nlos_watt,
        budget.interference_watt + budget.noise_watt,
    )
}

#[inline]
pub fn expected_se(p_los: f64, s_los: f64, s_nlos: f64, i_plus_n: f64) -> f64 {
    p_los * (1.0 + s_los / i_plus_n).log2() + (1.0 - p_los) * (1.0 + s_nlos / i_plus_n).log2()
}

/// Mean of the users' expected SE; `None` for an empty cell.
pub fn cell_se(user_se: &[f64]) -> Option<f64> {
    mean(user_se)
}

/// Mean over the cells that have a defined SE; `None` if every cell is idle.
pub fn system_se(cell_se: &[Option<f64>]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in cell_se.iter().flatten() {
        sum += s;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Link budget for user `u` served by drone `serving`, with closed-form
/// channel evaluation. Interference comes from every other drone flagged in
/// `transmitting` whose ground distance to `u` is within the interference
/// range, each weighted by its own LoS probability.
pub fn link_budget(
    u: GroundPoint,
    serving: usize,
    drones: &[DronePose],
    transmitting: &[bool],
    b_u: f64,
    config: &ScenarioConfig,
) -> LinkBudget {
    let h = config.drone_height;
    let gains = |r: f64| {
        let d = euclidean_distance(r, h);
        let p = los_probability(elevation_angle_deg(r, h), config.los_alpha, config.los_beta);
        let s_los = received_power_watt(b_u, d, PathKind::Los, config);
        let s_nlos = received_power_watt(b_u, d, PathKind::Nlos, config);
        (p, s_los, s_nlos)
    };
    let (p_los, s_los_watt, s_nlos_watt) = gains(ground_distance(u, &drones[serving]));
    let mut interference_watt = 0.0;
    for (i, pose) in drones.iter().enumerate() {
        if i == serving || !transmitting[i] {
            continue;
        }
        let r = ground_distance(u, pose);
        if r <= config.interference_range {
            let (p, sl, snl) = gains(r);
            interference_watt += p * sl + (1.0 - p) * snl;
        }
    }
    LinkBudget {
        p_los,
        s_los_watt,
        s_nlos_watt,
        interference_watt,
        noise_watt: noise_power_watt(b_u, config.ue_noise_figure_db),
    }
}

/// Full-band serving gains of a link at one ground distance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkGains {
    pub p_los: f64,
    pub s_los: f64,
    pub s_nlos: f64,
}

impl LinkGains {
    /// LoS-weighted received power.
    #[inline]
    pub fn expected(&self) -> f64 {
        self.p_los * self.s_los + (1.0 - self.p_los) * self.s_nlos
    }

    /// Expected SE when interference plus noise totals `i_plus_n`.
    #[inline]
    pub fn se(&self, i_plus_n: f64) -> f64 {
        expected_se(self.p_los, self.s_los, self.s_nlos, i_plus_n)
    }
}

/// Node values of the radial gain table.
#[derive(Debug, Clone, Copy)]
struct Node {
    p_los: f64,
    s_los: f64,
    s_nlos: f64,
    expected: f64,
}

/// Channel evaluator shared by the engine and the mobility algorithms.
///
/// All quantities are full-band (`b_u = B`). With proportional bandwidth
/// scaling the SINR does not depend on `b_u`, so callers rescale powers only
/// when they need absolute watts.
#[derive(Debug, Clone)]
pub struct LinkModel {
    config: ScenarioConfig,
    noise: f64,
    kappa: f64,
    table: Option<Table>,
}

#[derive(Debug, Clone)]
struct Table {
    inv_step: f64,
    nodes: Vec<Node>,
}

impl LinkModel {
    /// Closed-form evaluation only.
    pub fn exact(config: &ScenarioConfig) -> Self {
        LinkModel {
            config: config.clone(),
            noise: noise_power_watt(config.bandwidth_hz, config.ue_noise_figure_db),
            kappa: config.interference_range,
            table: None,
        }
    }

    /// Tabulated when `channel_table_step_m > 0`, closed form otherwise.
    pub fn from_config(config: &ScenarioConfig) -> Self {
        let mut model = Self::exact(config);
        let step = config.channel_table_step_m;
        if step > 0.0 {
            // Covers the interference range and any serving distance a drone
            // that strays a couple of cells out can produce; beyond it the
            // closed form takes over.
            let reach = config
                .interference_range
                .max(2.0 * config.cell_edge * std::f64::consts::SQRT_2);
            let n = (reach / step).ceil() as usize + 2;
            let nodes = (0..n)
                .map(|i| {
                    let g = model.exact_gains(i as f64 * step);
                    Node {
                        p_los: g.p_los,
                        s_los: g.s_los,
                        s_nlos: g.s_nlos,
                        expected: g.expected(),
                    }
                })
                .collect();
            model.table = Some(Table {
                inv_step: 1.0 / step,
                nodes,
            });
        }
        model
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    /// Full-band noise power.
    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn interference_range(&self) -> f64 {
        self.kappa
    }

    /// Closed-form gains at ground distance `r`.
    pub fn exact_gains(&self, r: f64) -> LinkGains {
        let c = &self.config;
        let d = euclidean_distance(r, c.drone_height);
        LinkGains {
            p_los: los_probability(
                elevation_angle_deg(r, c.drone_height),
                c.los_alpha,
                c.los_beta,
            ),
            s_los: received_power_watt(c.bandwidth_hz, d, PathKind::Los, c),
            s_nlos: received_power_watt(c.bandwidth_hz, d, PathKind::Nlos, c),
        }
    }

    #[inline]
    fn lookup(&self, r: f64) -> Option<(Node, Node, f64)> {
        let t = self.table.as_ref()?;
        let x = r * t.inv_step;
        let i = x as usize;
        if i + 1 >= t.nodes.len() {
            return None;
        }
        Some((t.nodes[i], t.nodes[i + 1], x - i as f64))
    }

    /// Full-band gains at ground distance `r`.
    #[inline]
    pub fn gains(&self, r: f64) -> LinkGains {
        match self.lookup(r) {
            Some((a, b, f)) => LinkGains {
                p_los: a.p_los + f * (b.p_los - a.p_los),
                s_los: a.s_los + f * (b.s_los - a.s_los),
                s_nlos: a.s_nlos + f * (b.s_nlos - a.s_nlos),
            },
            None => self.exact_gains(r),
        }
    }

    /// Full-band LoS-weighted received power at ground distance `r`.
    #[inline]
    pub fn expected_power(&self, r: f64) -> f64 {
        match self.lookup(r) {
            Some((a, b, f)) => a.expected + f * (b.expected - a.expected),
            None => self.exact_gains(r).expected(),
        }
    }

    /// Same contract as [`link_budget`], evaluated through this model.
    pub fn link_budget(
        &self,
        u: GroundPoint,
        serving: usize,
        drones: &[DronePose],
        transmitting: &[bool],
        b_u: f64,
    ) -> LinkBudget {
        let scale = b_u / self.config.bandwidth_hz;
        let g = self.gains(ground_distance(u, &drones[serving]));
        let mut interference = 0.0;
        for (i, pose) in drones.iter().enumerate() {
            if i != serving && transmitting[i] {
                let r = ground_distance(u, pose);
                if r <= self.kappa {
                    interference += self.expected_power(r);
                }
            }
        }
        LinkBudget {
            p_los: g.p_los,
            s_los_watt: scale * g.s_los,
            s_nlos_watt: scale * g.s_nlos,
            interference_watt: scale * interference,
            noise_watt: noise_power_watt(b_u, self.config.ue_noise_figure_db),
        }
    }
}
