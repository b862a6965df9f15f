//! Scenario parameters and their validation.
//!
//! Every model constant consumed by the channel, traffic, kinematic and
//! decision layers lives in [`ScenarioConfig`]. A config is immutable once
//! [`validate`] has accepted it and can be shared freely between runs.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bandwidth allocation strategy used at every resource allocation slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheduler {
    /// Total bandwidth split evenly between the active users of a cell.
    EqualShare,
    /// Whole bandwidth to the single active user with the best channel.
    #[serde(rename = "CQBased")]
    CqBased,
}

impl Scheduler {
    pub fn name(self) -> &'static str {
        match self {
            Scheduler::EqualShare => "EqualShare",
            Scheduler::CqBased => "CQBased",
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheduler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "equalshare" | "equal" | "equal_share" | "es" => Ok(Scheduler::EqualShare),
            "cqbased" | "cq" | "cq_based" | "cq-based" => Ok(Scheduler::CqBased),
            _ => Err(format!(
                "unknown scheduler `{s}` (expected EqualShare or CQBased)"
            )),
        }
    }
}

/// Drone mobility algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dma {
    /// Hover over the cell center (baseline).
    #[serde(rename = "HOV")]
    Hov,
    /// Per-drone maximisation of mean serving SNR.
    #[serde(rename = "SNR")]
    Snr,
    /// Per-drone maximisation of mean signal-to-leakage ratio.
    #[serde(rename = "SLR")]
    Slr,
    /// Best-response dynamics towards a pure Nash equilibrium.
    #[serde(rename = "GT")]
    Gt,
    /// Exhaustive search over joint angle profiles.
    #[serde(rename = "OPT")]
    Opt,
}

impl Dma {
    pub const ALL: [Dma; 5] = [Dma::Hov, Dma::Snr, Dma::Slr, Dma::Gt, Dma::Opt];

    pub fn name(self) -> &'static str {
        match self {
            Dma::Hov => "HOV",
            Dma::Snr => "SNR",
            Dma::Slr => "SLR",
            Dma::Gt => "GT",
            Dma::Opt => "OPT",
        }
    }
}

impl fmt::Display for Dma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Dma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dma::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown dma `{s}` (expected HOV, SNR, SLR, GT or OPT)"))
    }
}

/// Update order of the best-response sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Every player answers the previous profile simultaneously.
    Synchronous,
    /// Players answer one after another, seeing earlier updates of the sweep.
    Sequential,
}

/// Every model parameter of a simulated scenario.
///
/// Field names are the keys of the on-disk configuration format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Cells per grid side; must be odd so a center cell exists.
    pub grid_side: u32,
    /// Square cell edge length in meters.
    pub cell_edge: f64,
    pub users_per_cell: u32,
    pub bandwidth_hz: f64,
    /// Carrier frequency. Not consumed by any formula; the reference
    /// path-loss constants already embed it.
    pub carrier_hz: f64,
    pub tx_power_watt: f64,
    pub drone_height: f64,
    pub drone_speed: f64,
    pub max_accel: f64,
    pub direction_update_s: f64,
    pub ras_s: f64,
    /// Interference range in meters.
    pub interference_range: f64,
    pub mean_reading_s: f64,
    pub packet_bits: f64,
    /// Number of candidate turning angles, odd and at least 3.
    pub n_candidates: u32,
    pub los_alpha: f64,
    pub los_beta: f64,
    /// Path loss at the 1 m reference distance, dB.
    pub a_los_db: f64,
    pub a_nlos_db: f64,
    pub gamma_los: f64,
    pub gamma_nlos: f64,
    pub ue_noise_figure_db: f64,
    pub rwp_speed_range: [f64; 2],
    pub rwp_pause_range: [f64; 2],
    pub duration_s: f64,
    pub warmup_discard_s: f64,
    pub scheduler: Scheduler,
    pub dma: Dma,
    pub gt_max_sweeps: u32,
    pub gt_sweep_mode: SweepMode,
    /// Largest joint profile count the exhaustive search may enumerate.
    pub opt_max_profiles: u64,
    /// Sample points per candidate arc.
    pub path_samples: u32,
    /// Upper bound applied to the kinematic turning limit, radians.
    pub theta_cap_rad: f64,
    /// Radial step of the tabulated link-gain model in meters; `0` selects
    /// closed-form evaluation everywhere.
    pub channel_table_step_m: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            grid_side: 7,
            cell_edge: 80.0,
            users_per_cell: 5,
            bandwidth_hz: 5e6,
            carrier_hz: 2e9,
            tx_power_watt: 0.2512,
            drone_height: 10.0,
            drone_speed: 2.0,
            max_accel: 4.0,
            direction_update_s: 1.0,
            ras_s: 0.02,
            interference_range: 200.0,
            mean_reading_s: 40.0,
            packet_bits: 3.2e8,
            n_candidates: 21,
            los_alpha: 9.61,
            los_beta: 0.16,
            a_los_db: 41.1,
            a_nlos_db: 32.9,
            gamma_los: 2.09,
            gamma_nlos: 3.75,
            ue_noise_figure_db: 9.0,
            rwp_speed_range: [1.0, 3.0],
            rwp_pause_range: [0.0, 10.0],
            duration_s: 800.0,
            warmup_discard_s: 0.0,
            scheduler: Scheduler::EqualShare,
            dma: Dma::Gt,
            gt_max_sweeps: 50,
            gt_sweep_mode: SweepMode::Synchronous,
            opt_max_profiles: 1_000_000,
            path_samples: 5,
            theta_cap_rad: std::f64::consts::PI,
            channel_table_step_m: 0.01,
            seed: 1,
        }
    }
}

/// One violated rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Rejected configuration, carrying every violated rule.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    pub fn single(field: &'static str, rule: impl Into<String>) -> Self {
        ConfigError {
            violations: vec![Violation {
                field,
                rule: rule.into(),
            }],
        }
    }

    /// True if some violation mentions `field`.
    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario config")?;
        for v in &self.violations {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

/// Checks every invariant of `config` and hands it back unchanged if all hold.
pub fn validate(config: ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    let mut out = Vec::new();
    let mut fail = |field: &'static str, rule: &str| {
        out.push(Violation {
            field,
            rule: rule.to_string(),
        });
    };

    if config.grid_side == 0 {
        fail("grid_side", "grid_side must be positive");
    } else if config.grid_side.is_multiple_of(2) {
        fail("grid_side", "grid_side must be odd");
    }
    if config.users_per_cell == 0 {
        fail("users_per_cell", "users_per_cell must be positive");
    }
    if config.n_candidates < 3 || config.n_candidates.is_multiple_of(2) {
        fail("n_candidates", "n_candidates must be odd and >= 3");
    }
    if config.gt_max_sweeps == 0 {
        fail("gt_max_sweeps", "gt_max_sweeps must be positive");
    }
    if config.path_samples == 0 {
        fail("path_samples", "path_samples must be positive");
    }
    if config.opt_max_profiles == 0 {
        fail("opt_max_profiles", "opt_max_profiles must be positive");
    }

    let positive: [(&'static str, f64); 21] = [
        ("cell_edge", config.cell_edge),
        ("bandwidth_hz", config.bandwidth_hz),
        ("carrier_hz", config.carrier_hz),
        ("tx_power_watt", config.tx_power_watt),
        ("drone_height", config.drone_height),
        ("drone_speed", config.drone_speed),
        ("max_accel", config.max_accel),
        ("direction_update_s", config.direction_update_s),
        ("ras_s", config.ras_s),
        ("interference_range", config.interference_range),
        ("mean_reading_s", config.mean_reading_s),
        ("packet_bits", config.packet_bits),
        ("los_alpha", config.los_alpha),
        ("los_beta", config.los_beta),
        ("a_los_db", config.a_los_db),
        ("a_nlos_db", config.a_nlos_db),
        ("gamma_los", config.gamma_los),
        ("gamma_nlos", config.gamma_nlos),
        ("ue_noise_figure_db", config.ue_noise_figure_db),
        ("duration_s", config.duration_s),
        ("theta_cap_rad", config.theta_cap_rad),
    ];
    for (field, value) in positive {
        if !(value.is_finite() && value > 0.0) {
            fail(field, &format!("{field} must be finite and > 0"));
        }
    }

    if !(config.warmup_discard_s.is_finite() && config.warmup_discard_s >= 0.0) {
        fail(
            "warmup_discard_s",
            "warmup_discard_s must be finite and >= 0",
        );
    } else if config.warmup_discard_s >= config.duration_s {
        fail(
            "warmup_discard_s",
            "warmup_discard_s must be shorter than duration_s",
        );
    }
    if !(config.channel_table_step_m.is_finite() && config.channel_table_step_m >= 0.0) {
        fail(
            "channel_table_step_m",
            "channel_table_step_m must be finite and >= 0",
        );
    }
    if config.theta_cap_rad > std::f64::consts::PI {
        fail("theta_cap_rad", "theta_cap_rad must not exceed pi");
    }

    let [lo, hi] = config.rwp_speed_range;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0) {
        fail("rwp_speed_range", "rwp speeds must be finite and > 0");
    } else if lo > hi {
        fail("rwp_speed_range", "range must be ordered low <= high");
    }
    let [lo, hi] = config.rwp_pause_range;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0) {
        fail("rwp_pause_range", "rwp pauses must be finite and >= 0");
    } else if lo > hi {
        fail("rwp_pause_range", "range must be ordered low <= high");
    }

    if config.ras_s > 0.0 && config.direction_update_s > 0.0 {
        if ratio_steps(config.direction_update_s, config.ras_s).is_none() {
            fail("ras_s", "ras must divide t_m");
        }
        if ratio_steps(config.duration_s, config.direction_update_s).is_none() {
            fail(
                "duration_s",
                "duration_s must be a whole number of direction update intervals",
            );
        }
    }

    if out.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError { violations: out })
    }
}

/// `Some(n)` when `whole` is an integer multiple `n >= 1` of `part`, up to
/// floating point representation error.
pub(crate) fn ratio_steps(whole: f64, part: f64) -> Option<u64> {
    let ratio = whole / part;
    let n = ratio.round();
    if n >= 1.0 && (ratio - n).abs() <= 1e-9 * n.max(1.0) {
        Some(n as u64)
    } else {
        None
    }
}

impl ScenarioConfig {
    /// Number of cells in the grid.
    pub fn n_cells(&self) -> usize {
        (self.grid_side as usize).pow(2)
    }

    /// Resource allocation slots per direction update interval.
    pub fn ticks_per_epoch(&self) -> u64 {
        ratio_steps(self.direction_update_s, self.ras_s).expect("validated config")
    }

    /// Total resource allocation slots in a run.
    pub fn total_ticks(&self) -> u64 {
        ratio_steps(self.duration_s, self.ras_s).expect("validated config")
    }
}
