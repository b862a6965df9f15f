//! Deterministic system-level simulator of multi-cell drone base stations.
//!
//! A square grid of cells is served by one drone each, flying at fixed
//! height and speed. Ground users download fixed-size packets separated by
//! exponential reading gaps while walking random waypoints. Once per
//! direction update interval every drone commits to a turning arc chosen by
//! a mobility algorithm; the engine then steps scheduling, delivery and
//! traffic every resource allocation slot.
//!
//! ```
//! use aerocell_core::{run, summarize, Dma, ScenarioConfig};
//!
//! let cfg = ScenarioConfig { grid_side: 3, duration_s: 5.0, dma: Dma::Snr, ..Default::default() };
//! let result = run(&cfg).unwrap();
//! assert_eq!(result.ticks.len(), 250);
//! let summary = summarize(&result);
//! assert!(summary.tx_time_frac <= 1.0);
//! ```

pub mod channel;
pub mod config;
pub mod dma;
pub mod engine;
pub mod geometry;
pub mod metrics;
pub mod rng;
pub mod scheduler;
pub mod traffic;

pub use channel::{LinkBudget, LinkGains, LinkModel};
pub use config::{validate, ConfigError, Dma, ScenarioConfig, Scheduler, SweepMode, Violation};
pub use dma::{decide, path_utility_se, DecisionOutcome, Diagnostics, DmaError, SystemSnapshot};
pub use engine::{run, run_batch, BatchResult, EngineError, LinkSample, RunResult, TickRecord};
pub use geometry::{CandidatePath, CellGrid, DronePose, GroundPoint, Rect};
pub use metrics::{
    aggregate, summarize, AggregateSummary, Cdf, MetricsError, MetricsSummary, Stat,
};
pub use traffic::{PacketRecord, TrafficState, UserState};
