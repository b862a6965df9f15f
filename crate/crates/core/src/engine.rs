//! Time-stepped simulation loop.
//!
//! Every resource allocation slot runs, in order: decide (at direction update
//! boundaries), move drones, move users, schedule, deliver, step traffic and
//! record. Only the center cell is recorded in detail.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{system_se, LinkModel};
use crate::config::{validate, ConfigError, Dma, ScenarioConfig, Scheduler};
use crate::dma::{decide, Diagnostics, DmaError, SystemSnapshot};
use crate::geometry::{
    arc_advance, elevation_angle_deg, CellGrid, DronePose, GeometryError, GroundPoint, Rect,
};
use crate::metrics::{aggregate, summarize, AggregateSummary, MetricsSummary};
use crate::rng::{stream_rng, Stream};
use crate::scheduler::{allocate_cq, allocate_equal};
use crate::traffic::{
    step_traffic, step_user_motion, PacketRecord, TrafficError, TrafficEvent, UserParams, UserState,
};

/// One served link of the center cell during one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    /// Index of the user within the center cell.
    pub user: u32,
    pub bandwidth_hz: f64,
    pub se: f64,
    pub ground_distance: f64,
    pub elevation_deg: f64,
    pub p_los: f64,
    pub delivered_bits: f64,
}

/// Center-cell state of one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    /// Start of the slot.
    pub time_s: f64,
    /// Mean SE over the allocated users of the center cell.
    pub cell_se: Option<f64>,
    /// Mean of the defined cell SEs over the whole grid.
    pub system_se: Option<f64>,
    pub drone_position: GroundPoint,
    pub drone_outside: bool,
    /// Every active user of the center cell, allocated or not.
    pub links: Vec<LinkSample>,
}

impl TickRecord {
    pub fn active_users(&self) -> usize {
        self.links.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub time_s: f64,
    pub diagnostics: Diagnostics,
}

/// Bits credited to downloads over the whole grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BitLedger {
    pub delivered_bits: f64,
    pub completed_bits: f64,
    /// Bits already received by downloads still running at the end.
    pub in_flight_bits: f64,
    pub completed_packets: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub ticks: Vec<TickRecord>,
    /// Completed downloads of center-cell users, in completion order; user
    /// ids are center-cell indices.
    pub packets: Vec<PacketRecord>,
    /// Slots each drone spent outside its own cell.
    pub outside_ticks: Vec<u64>,
    pub decisions: Vec<DecisionRecord>,
    pub ledger: BitLedger,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineFault {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dma(#[from] DmaError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(ConfigError),
    #[error("tick {tick} (t = {time_s} s): {fault}")]
    Tick {
        tick: u64,
        time_s: f64,
        fault: EngineFault,
    },
    #[error("seed {seed}: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<EngineError>,
    },
}

impl EngineError {
    fn at(tick: u64, time_s: f64, fault: impl Into<EngineFault>) -> Self {
        EngineError::Tick {
            tick,
            time_s,
            fault: fault.into(),
        }
    }
}

/// Simulates one run with `config.seed`.
pub fn run(config: &ScenarioConfig) -> Result<RunResult, EngineError> {
    let cfg = validate(config.clone()).map_err(EngineError::Config)?;
    World::new(&cfg).run()
}

/// Per-seed results and their across-seed summary.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub results: Vec<RunResult>,
    pub summaries: Vec<MetricsSummary>,
    pub aggregate: AggregateSummary,
}

/// Runs `config` once per seed, in parallel; results follow `seeds` order.
pub fn run_batch(config: &ScenarioConfig, seeds: &[u64]) -> Result<BatchResult, EngineError> {
    if seeds.is_empty() {
        return Err(EngineError::Config(ConfigError::single(
            "seeds",
            "at least one seed is required",
        )));
    }
    let results = seeds
        .par_iter()
        .map(|&seed| {
            run(&ScenarioConfig {
                seed,
                ..config.clone()
            })
            .map_err(|e| EngineError::Seed {
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summaries: Vec<MetricsSummary> = results.iter().map(summarize).collect();
    let aggregate = aggregate(&summaries);
    Ok(BatchResult {
        results,
        summaries,
        aggregate,
    })
}

struct World {
    cfg: ScenarioConfig,
    link: LinkModel,
    grid: CellGrid,
    bounds: Vec<Rect>,
    params: UserParams,
    center: usize,
    users_per_cell: usize,
    poses: Vec<DronePose>,
    epoch_start: Vec<DronePose>,
    angles: Vec<f64>,
    hover: bool,
    users: Vec<UserState>,
    motion_rng: Vec<ChaCha8Rng>,
    traffic_rng: Vec<ChaCha8Rng>,
    game_rng: ChaCha8Rng,
}

impl World {
    fn new(cfg: &ScenarioConfig) -> Self {
        let link = LinkModel::from_config(cfg);
        let grid = CellGrid::new(cfg.grid_side as usize, cfg.cell_edge);
        let bounds: Vec<Rect> = (0..grid.n_cells()).map(|c| grid.bounds(c)).collect();
        let params = UserParams::from_config(cfg);
        let mut placement = stream_rng(cfg.seed, Stream::Placement);
        let speed = if cfg.dma == Dma::Hov {
            0.0
        } else {
            cfg.drone_speed
        };
        let poses: Vec<DronePose> = (0..grid.n_cells())
            .map(|c| {
                let heading = rand::Rng::random_range(
                    &mut placement,
                    -std::f64::consts::PI..std::f64::consts::PI,
                );
                DronePose::new(grid.cell_center(c), heading, speed, cfg.drone_height)
            })
            .collect();
        let u = cfg.users_per_cell as usize;
        let n_users = grid.n_cells() * u;
        let mut motion_rng: Vec<ChaCha8Rng> = (0..n_users)
            .map(|i| stream_rng(cfg.seed, Stream::Motion(i as u32)))
            .collect();
        let mut traffic_rng: Vec<ChaCha8Rng> = (0..n_users)
            .map(|i| stream_rng(cfg.seed, Stream::Traffic(i as u32)))
            .collect();
        let users = (0..n_users)
            .map(|i| {
                UserState::spawn(
                    i / u,
                    &bounds[i / u],
                    &params,
                    &mut motion_rng[i],
                    &mut traffic_rng[i],
                )
            })
            .collect();
        World {
            link,
            center: grid.center_cell(),
            bounds,
            params,
            users_per_cell: u,
            epoch_start: poses.clone(),
            angles: vec![0.0; poses.len()],
            poses,
            hover: false,
            users,
            motion_rng,
            traffic_rng,
            game_rng: stream_rng(cfg.seed, Stream::GameInit),
            grid,
            cfg: cfg.clone(),
        }
    }

    fn snapshot<'a>(
        link: &'a LinkModel,
        grid: CellGrid,
        poses: &[DronePose],
        users: &[UserState],
        time_s: f64,
    ) -> SystemSnapshot<'a> {
        let n = grid.n_cells();
        let mut active_users = vec![Vec::new(); n];
        let mut all_users = vec![Vec::new(); n];
        for user in users {
            all_users[user.home_cell].push(user.position);
            if user.traffic.is_active() {
                active_users[user.home_cell].push(user.position);
            }
        }
        SystemSnapshot {
            time_s,
            link,
            grid,
            poses: poses.to_vec(),
            active_users,
            all_users,
        }
    }

    fn run(mut self) -> Result<RunResult, EngineError> {
        let cfg = self.cfg.clone();
        let n_cells = self.grid.n_cells();
        let u = self.users_per_cell;
        let total = cfg.total_ticks();
        let per_epoch = cfg.ticks_per_epoch();
        let t_r = cfg.ras_s;
        let t_m = cfg.direction_update_s;
        let noise = self.link.noise();
        let kappa = self.link.interference_range();
        let bandwidth = cfg.bandwidth_hz;

        let mut ticks = Vec::with_capacity(total as usize);
        let mut packets = Vec::new();
        let mut decisions = Vec::with_capacity((total / per_epoch) as usize);
        let mut outside_ticks = vec![0u64; n_cells];
        let mut ledger = BitLedger::default();

        let mut active: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
        let mut se = vec![0.0; self.users.len()];
        let mut share = vec![0.0; self.users.len()];
        let mut cell_se = vec![None; n_cells];

        for tick in 0..total {
            let now = tick as f64 * t_r;
            let in_epoch = tick % per_epoch;

            // (1) decide
            if in_epoch == 0 {
                if cfg.dma == Dma::Hov {
                    self.hover = true;
                    decisions.push(DecisionRecord {
                        time_s: now,
                        diagnostics: Diagnostics::default(),
                    });
                } else {
                    let snap = Self::snapshot(&self.link, self.grid, &self.poses, &self.users, now);
                    let out = decide(cfg.dma, &snap, &mut self.game_rng)
                        .map_err(|e| EngineError::at(tick, now, e))?;
                    self.hover = out.hover;
                    self.angles = out.angles;
                    decisions.push(DecisionRecord {
                        time_s: now,
                        diagnostics: out.diagnostics,
                    });
                }
                self.epoch_start.clone_from(&self.poses);
            }

            // (2) move drones
            if !self.hover {
                let elapsed = t_m * (in_epoch + 1) as f64 / per_epoch as f64;
                for n in 0..n_cells {
                    self.poses[n] = arc_advance(&self.epoch_start[n], self.angles[n], elapsed, t_m)
                        .map_err(|e| EngineError::at(tick, now, e))?;
                }
            }
            for (n, pose) in self.poses.iter().enumerate() {
                if !self.bounds[n].contains(pose.position) {
                    outside_ticks[n] += 1;
                }
            }

            // (3) move users
            for (i, user) in self.users.iter_mut().enumerate() {
                let b = self.bounds[user.home_cell];
                step_user_motion(user, t_r, &b, &self.params, &mut self.motion_rng[i]);
            }

            // (4) active sets; (5) channel
            for (c, q) in active.iter_mut().enumerate() {
                q.clear();
                q.extend((c * u..(c + 1) * u).filter(|&i| self.users[i].traffic.is_active()));
            }
            for c in 0..n_cells {
                for &i in &active[c] {
                    let pos = self.users[i].position;
                    let gains = self.link.gains(pos.distance(self.poses[c].position));
                    let mut interference = 0.0;
                    for (j, q) in active.iter().enumerate() {
                        if j == c || q.is_empty() {
                            continue;
                        }
                        let r = pos.distance(self.poses[j].position);
                        if r <= kappa {
                            interference += self.link.expected_power(r);
                        }
                    }
                    se[i] = gains.se(interference + noise);
                }
            }
            for c in 0..n_cells {
                let alloc = match cfg.scheduler {
                    Scheduler::EqualShare => allocate_equal(&active[c], bandwidth),
                    Scheduler::CqBased => {
                        let q: Vec<(usize, f64)> = active[c].iter().map(|&i| (i, se[i])).collect();
                        allocate_cq(&q, bandwidth)
                    }
                };
                let mut sum = 0.0;
                let mut served = 0;
                for &(i, b) in &alloc.shares {
                    share[i] = b;
                    if b > 0.0 {
                        sum += se[i];
                        served += 1;
                    }
                }
                cell_se[c] = (served > 0).then(|| sum / served as f64);
            }

            // (6) deliver; (7) traffic
            let mut center_links = Vec::new();
            for (i, user) in self.users.iter_mut().enumerate() {
                let c = user.home_cell;
                let offered = if user.traffic.is_active() {
                    share[i] * se[i] * t_r
                } else {
                    0.0
                };
                let step = step_traffic(
                    i,
                    &mut user.traffic,
                    now,
                    t_r,
                    offered,
                    &self.params,
                    &mut self.traffic_rng[i],
                )
                .map_err(|e| EngineError::at(tick, now, e))?;
                ledger.delivered_bits += step.consumed_bits;
                for ev in step.events {
                    if let TrafficEvent::RequestCompleted(rec) = ev {
                        ledger.completed_bits += rec.bits;
                        ledger.completed_packets += 1;
                        if c == self.center {
                            packets.push(PacketRecord {
                                user: i - c * u,
                                ..rec
                            });
                        }
                    }
                }
                if c == self.center && active[c].binary_search(&i).is_ok() {
                    let r = user.position.distance(self.poses[c].position);
                    center_links.push(LinkSample {
                        user: (i - c * u) as u32,
                        bandwidth_hz: share[i],
                        se: se[i],
                        ground_distance: r,
                        elevation_deg: elevation_angle_deg(r, cfg.drone_height),
                        p_los: self.link.gains(r).p_los,
                        delivered_bits: step.consumed_bits,
                    });
                }
            }
            for &i in active.iter().flatten() {
                share[i] = 0.0;
            }

            // (8) record
            let drone = self.poses[self.center].position;
            ticks.push(TickRecord {
                time_s: now,
                cell_se: cell_se[self.center],
                system_se: system_se(&cell_se),
                drone_position: drone,
                drone_outside: !self.bounds[self.center].contains(drone),
                links: center_links,
            });
        }

        for user in &self.users {
            if let crate::traffic::TrafficState::Active { remaining_bits, .. } = user.traffic {
                ledger.in_flight_bits += cfg.packet_bits - remaining_bits;
            }
        }

        Ok(RunResult {
            config: cfg,
            ticks,
            packets,
            outside_ticks,
            decisions,
            ledger,
        })
    }
}
