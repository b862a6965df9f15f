//! Performance metrics computed from a finished run.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{RunResult, TickRecord};
use crate::traffic::PacketRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no data for {0}")]
    NoData(&'static str),
}

/// Mean of the per-slot center-cell SE over the slots where it is defined.
pub fn time_avg_se(records: &[TickRecord]) -> Result<f64, MetricsError> {
    mean_defined(records.iter().map(|r| r.cell_se))
}

/// Mean of the per-slot grid-wide SE over the slots where it is defined.
pub fn time_avg_system_se(records: &[TickRecord]) -> Result<f64, MetricsError> {
    mean_defined(records.iter().map(|r| r.system_se))
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Result<f64, MetricsError> {
    let (sum, n) = values
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return Err(MetricsError::NoData("spectral efficiency"));
    }
    Ok(sum / n as f64)
}

/// Jain's fairness index `(sum r)^2 / (n * sum r^2)`.
pub fn jain_index(rates: &[f64]) -> Result<f64, MetricsError> {
    let sum: f64 = rates.iter().sum();
    let sq: f64 = rates.iter().map(|r| r * r).sum();
    if rates.is_empty() || sq == 0.0 {
        return Err(MetricsError::NoData("rates"));
    }
    Ok(sum * sum / (rates.len() as f64 * sq))
}

/// Average data rate `b_u * SE` of each center-cell user over the slots it
/// was active. Users that never became active are left out.
pub fn user_mean_rates(records: &[TickRecord], users: usize) -> Vec<f64> {
    let mut sum = vec![0.0; users];
    let mut count = vec![0u64; users];
    for link in records.iter().flat_map(|r| &r.links) {
        sum[link.user as usize] += link.bandwidth_hz * link.se;
        count[link.user as usize] += 1;
    }
    sum.iter()
        .zip(&count)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| s / c as f64)
        .collect()
}

/// `q`-th percentile (0..=100) with linear interpolation between the
/// closest order statistics.
pub fn percentile(values: &[f64], q: f64) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::NoData("percentile"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketStats {
    pub throughputs_bps: Vec<f64>,
    pub mean_bps: f64,
    pub p5_bps: f64,
}

/// Per-packet throughput `bits / tau` with its mean and 5th percentile.
pub fn packet_throughputs(packets: &[PacketRecord]) -> Result<PacketStats, MetricsError> {
    if packets.is_empty() {
        return Err(MetricsError::NoData("packets"));
    }
    let throughputs_bps: Vec<f64> = packets.iter().map(PacketRecord::throughput_bps).collect();
    let mean_bps = throughputs_bps.iter().sum::<f64>() / throughputs_bps.len() as f64;
    let p5_bps = percentile(&throughputs_bps, 5.0)?;
    Ok(PacketStats {
        throughputs_bps,
        mean_bps,
        p5_bps,
    })
}

pub fn completed_per_user(packets: &[PacketRecord], users: usize) -> f64 {
    if users == 0 {
        return 0.0;
    }
    packets.len() as f64 / users as f64
}

/// Empirical CDF as `(x, F(x))` steps over the distinct sample values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Cdf {
    pub points: Vec<(f64, f64)>,
    /// Number of underlying samples.
    pub samples: usize,
}

impl Cdf {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in v.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match points.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => points.push((x, f)),
            }
        }
        Cdf {
            points,
            samples: v.len(),
        }
    }

    /// Pools several CDFs as if built from the union of their samples.
    pub fn merge(parts: &[Cdf]) -> Self {
        let mut counted: Vec<(f64, usize)> = Vec::new();
        for c in parts {
            let n = c.samples as f64;
            let mut below = 0usize;
            for &(x, f) in &c.points {
                let upto = (f * n).round() as usize;
                counted.push((x, upto - below));
                below = upto;
            }
        }
        counted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: usize = counted.iter().map(|c| c.1).sum();
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut acc = 0usize;
        for (x, k) in counted {
            acc += k;
            let f = acc as f64 / total as f64;
            match points.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => points.push((x, f)),
            }
        }
        Cdf {
            points,
            samples: total,
        }
    }

    /// Keeps the first step at or above each of `levels` evenly spaced
    /// probability levels, and always the last step. Values at kept steps are
    /// exact.
    pub fn downsample(&self, levels: usize) -> Self {
        let mut points = Vec::new();
        let mut next = 1usize;
        for (i, &(x, f)) in self.points.iter().enumerate() {
            let last = i + 1 == self.points.len();
            if last || f * levels as f64 >= next as f64 {
                points.push((x, f));
                while (next as f64) <= f * levels as f64 {
                    next += 1;
                }
            }
        }
        Cdf {
            points,
            samples: self.samples,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max(&self) -> Option<f64> {
        self.points.last().map(|p| p.0)
    }

    /// `F(x)`: share of samples at or below `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|p| p.0 <= x);
        if i == 0 {
            0.0
        } else {
            self.points[i - 1].1
        }
    }
}

/// Link geometry of the center cell's active users, sampled every slot.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeometryCdfs {
    pub ground_distance: Cdf,
    pub elevation_deg: Cdf,
    pub p_los: Cdf,
}

pub fn geometry_statistics(records: &[TickRecord]) -> GeometryCdfs {
    let links: Vec<_> = records.iter().flat_map(|r| &r.links).collect();
    let collect = |f: fn(&crate::engine::LinkSample) -> f64| {
        Cdf::from_samples(&links.iter().map(|l| f(l)).collect::<Vec<_>>())
    };
    GeometryCdfs {
        ground_distance: collect(|l| l.ground_distance),
        elevation_deg: collect(|l| l.elevation_deg),
        p_los: collect(|l| l.p_los),
    }
}

/// Share of slots the center drone spent outside its own cell.
pub fn outside_cell_fraction(records: &[TickRecord]) -> f64 {
    fraction(records, |r| r.drone_outside)
}

/// Share of slots the center drone had at least one active user.
pub fn transmission_time_fraction(records: &[TickRecord]) -> f64 {
    fraction(records, |r| !r.links.is_empty())
}

/// Share of user-slots in which a center-cell user was downloading.
pub fn user_active_fraction(records: &[TickRecord], users: usize) -> f64 {
    if records.is_empty() || users == 0 {
        return 0.0;
    }
    let active: usize = records.iter().map(|r| r.links.len()).sum();
    active as f64 / (records.len() * users) as f64
}

fn fraction(records: &[TickRecord], pred: impl Fn(&TickRecord) -> bool) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| pred(r)).count() as f64 / records.len() as f64
}

/// Per-run headline numbers. Undefined metrics are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub time_avg_se: Option<f64>,
    pub time_avg_system_se: Option<f64>,
    pub jain: Option<f64>,
    pub mean_thp_bps: Option<f64>,
    pub p5_thp_bps: Option<f64>,
    pub completed_per_user: f64,
    pub tx_time_frac: f64,
    pub outside_frac: f64,
    pub user_active_frac: f64,
    pub mean_tau_s: Option<f64>,
    pub cdfs: GeometryCdfs,
}

/// Metrics of the part of the run after the warm-up window.
pub fn summarize(result: &RunResult) -> MetricsSummary {
    let warmup = result.config.warmup_discard_s;
    let users = result.config.users_per_cell as usize;
    let start = result.ticks.partition_point(|r| r.time_s < warmup);
    let ticks = &result.ticks[start..];
    let packets: Vec<PacketRecord> = result
        .packets
        .iter()
        .copied()
        .filter(|p| p.start_s >= warmup)
        .collect();
    let stats = packet_throughputs(&packets).ok();
    MetricsSummary {
        time_avg_se: time_avg_se(ticks).ok(),
        time_avg_system_se: time_avg_system_se(ticks).ok(),
        jain: jain_index(&user_mean_rates(ticks, users)).ok(),
        mean_thp_bps: stats.as_ref().map(|s| s.mean_bps),
        p5_thp_bps: stats.as_ref().map(|s| s.p5_bps),
        completed_per_user: completed_per_user(&packets, users),
        tx_time_frac: transmission_time_fraction(ticks),
        outside_frac: outside_cell_fraction(ticks),
        user_active_frac: user_active_fraction(ticks, users),
        mean_tau_s: (!packets.is_empty())
            .then(|| packets.iter().map(|p| p.tau_s).sum::<f64>() / packets.len() as f64),
        cdfs: geometry_statistics(ticks),
    }
}

/// Mean and sample standard deviation over the runs where a metric is
/// defined; `n` counts those runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

impl Stat {
    /// Values are summed in sorted order so the result does not depend on
    /// the order of the runs.
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut v: Vec<f64> = values.into_iter().flatten().collect();
        if v.is_empty() {
            return Stat::default();
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
            dev.sort_by(f64::total_cmp);
            (dev.iter().sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat {
            mean: Some(mean),
            std: Some(std),
            n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub time_avg_se: Stat,
    pub time_avg_system_se: Stat,
    pub jain: Stat,
    pub mean_thp_bps: Stat,
    pub p5_thp_bps: Stat,
    pub completed_per_user: Stat,
    pub tx_time_frac: Stat,
    pub outside_frac: Stat,
    pub user_active_frac: Stat,
    pub mean_tau_s: Stat,
}

pub fn aggregate(runs: &[MetricsSummary]) -> AggregateSummary {
    let s = |f: fn(&MetricsSummary) -> Option<f64>| Stat::of(runs.iter().map(f));
    AggregateSummary {
        time_avg_se: s(|m| m.time_avg_se),
        time_avg_system_se: s(|m| m.time_avg_system_se),
        jain: s(|m| m.jain),
        mean_thp_bps: s(|m| m.mean_thp_bps),
        p5_thp_bps: s(|m| m.p5_thp_bps),
        completed_per_user: s(|m| Some(m.completed_per_user)),
        tx_time_frac: s(|m| Some(m.tx_time_frac)),
        outside_frac: s(|m| Some(m.outside_frac)),
        user_active_frac: s(|m| Some(m.user_active_frac)),
        mean_tau_s: s(|m| m.mean_tau_s),
    }
}
