//! Experiment driver: resolves a sweep plan from flags and an optional
//! config file, runs every sweep cell for every seed and writes CSV/JSON
//! results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use aerocell_core::metrics::{aggregate, summarize, AggregateSummary, Cdf, MetricsSummary, Stat};
use aerocell_core::{run, validate, Dma, PacketRecord, RunResult, ScenarioConfig, Scheduler};
use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const SUMMARY_HEADER: &str = "dma,speed,accel,users,scheduler,seed,time_avg_se,jain,mean_thp_bps,p5_thp_bps,completed_per_user,tx_time_frac,outside_frac";

/// Steps kept per CDF in `cdfs.csv`.
const CDF_LEVELS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Summary,
    Ticks,
    Packets,
    Cdfs,
}

#[derive(Debug, Parser)]
#[command(
    name = "aerocell",
    version,
    about = "Simulate multi-cell drone base stations"
)]
pub struct Args {
    /// Scenario file (TOML or JSON); flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Mobility algorithms: HOV, SNR, SLR, GT, OPT.
    #[arg(long, value_delimiter = ',', value_name = "NAME")]
    pub dma: Vec<Dma>,
    /// Drone speeds in m/s.
    #[arg(long, value_delimiter = ',', value_name = "M/S")]
    pub speed: Vec<f64>,
    /// Maximum accelerations in m/s^2.
    #[arg(long, value_delimiter = ',', value_name = "M/S2")]
    pub accel: Vec<f64>,
    /// Users per cell.
    #[arg(long, value_delimiter = ',', value_name = "N")]
    pub users: Vec<u32>,
    /// Bandwidth allocation: equal or cq.
    #[arg(long, value_delimiter = ',', value_name = "NAME")]
    pub scheduler: Vec<Scheduler>,
    /// Explicit seed list.
    #[arg(long, value_delimiter = ',', value_name = "CSV")]
    pub seeds: Vec<u64>,
    /// Number of runs, seeded 1..=N when no seeds are given.
    #[arg(long, value_name = "N")]
    pub runs: Option<u32>,
    /// Simulated time per run in seconds.
    #[arg(long, value_name = "S")]
    pub duration: Option<f64>,
    /// Cells per grid side.
    #[arg(long, value_name = "N")]
    pub grid_side: Option<u32>,
    /// Candidate turning angles per decision.
    #[arg(long, value_name = "G")]
    pub candidates: Option<u32>,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Files to write besides run.json.
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [Emit::Summary, Emit::Packets, Emit::Cdfs])]
    pub emit: Vec<Emit>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

/// Values swept over; each axis holds at least one entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub dma: Vec<Dma>,
    #[serde(default)]
    pub speed: Vec<f64>,
    #[serde(default)]
    pub accel: Vec<f64>,
    #[serde(default)]
    pub users: Vec<u32>,
    #[serde(default)]
    pub scheduler: Vec<Scheduler>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub base: ScenarioConfig,
    pub sweep: Sweep,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub emit: Vec<Emit>,
    pub threads: Option<usize>,
}

/// One point of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub config: ScenarioConfig,
}

impl Cell {
    fn identity(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{}",
            c.dma, c.drone_speed, c.max_accel, c.users_per_cell, c.scheduler
        )
    }
}

impl ExperimentPlan {
    /// Cartesian product in dma, speed, accel, users, scheduler order.
    pub fn cells(&self) -> Vec<Cell> {
        let s = &self.sweep;
        let mut out = Vec::new();
        for &dma in &s.dma {
            for &speed in &s.speed {
                for &accel in &s.accel {
                    for &users in &s.users {
                        for &scheduler in &s.scheduler {
                            out.push(Cell {
                                config: ScenarioConfig {
                                    dma,
                                    drone_speed: speed,
                                    max_accel: accel,
                                    users_per_cell: users,
                                    scheduler,
                                    ..self.base.clone()
                                },
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Resolved plan as the flat document `--config` accepts.
    pub fn to_json(&self) -> Value {
        let mut map = match serde_json::to_value(&self.base) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        map.insert("seeds".into(), serde_json::json!(self.seeds));
        map.insert(
            "sweep".into(),
            serde_json::to_value(&self.sweep).unwrap_or(Value::Null),
        );
        map.insert(
            "software_version".into(),
            Value::String(env!("CARGO_PKG_VERSION").into()),
        );
        Value::Object(map)
    }
}

fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let value: Result<Value, String> = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    let value = value.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::Config(format!(
            "{}: expected a table of settings",
            path.display()
        )));
    }
    Ok(value)
}

/// Merges the config file (if any) with the flags into a validated plan.
pub fn resolve_plan(args: &Args) -> Result<ExperimentPlan, CliError> {
    let mut doc = match &args.config {
        Some(p) => read_config_file(p)?,
        None => Value::Object(Map::new()),
    };
    let map = doc.as_object_mut().expect("object");
    let file_seeds = map.remove("seeds");
    let file_sweep = map.remove("sweep");
    map.remove("software_version");

    let mut base: ScenarioConfig =
        serde_json::from_value(doc).map_err(|e| CliError::Config(format!("config: {e}")))?;
    if let Some(d) = args.duration {
        base.duration_s = d;
    }
    if let Some(g) = args.grid_side {
        base.grid_side = g;
    }
    if let Some(g) = args.candidates {
        base.n_candidates = g;
    }

    let file_sweep: Sweep = match file_sweep {
        Some(v) => {
            serde_json::from_value(v).map_err(|e| CliError::Config(format!("sweep: {e}")))?
        }
        None => Sweep {
            dma: vec![],
            speed: vec![],
            accel: vec![],
            users: vec![],
            scheduler: vec![],
        },
    };
    fn pick<T: Clone>(flag: &[T], file: Vec<T>, base: T) -> Vec<T> {
        if !flag.is_empty() {
            flag.to_vec()
        } else if !file.is_empty() {
            file
        } else {
            vec![base]
        }
    }
    let sweep = Sweep {
        dma: pick(&args.dma, file_sweep.dma, base.dma),
        speed: pick(&args.speed, file_sweep.speed, base.drone_speed),
        accel: pick(&args.accel, file_sweep.accel, base.max_accel),
        users: pick(&args.users, file_sweep.users, base.users_per_cell),
        scheduler: pick(&args.scheduler, file_sweep.scheduler, base.scheduler),
    };
    // The base keeps the first value of every axis so the document stays
    // self-consistent.
    base.dma = sweep.dma[0];
    base.drone_speed = sweep.speed[0];
    base.max_accel = sweep.accel[0];
    base.users_per_cell = sweep.users[0];
    base.scheduler = sweep.scheduler[0];

    let seeds = if !args.seeds.is_empty() {
        if let Some(n) = args.runs {
            if n as usize != args.seeds.len() {
                return Err(CliError::Usage(format!(
                    "--runs {n} disagrees with {} --seeds",
                    args.seeds.len()
                )));
            }
        }
        args.seeds.clone()
    } else if let Some(n) = args.runs {
        if n == 0 {
            return Err(CliError::Usage("--runs must be at least 1".into()));
        }
        (1..=n as u64).collect()
    } else if let Some(v) = file_seeds {
        serde_json::from_value(v).map_err(|e| CliError::Config(format!("seeds: {e}")))?
    } else {
        vec![base.seed]
    };
    if seeds.is_empty() {
        return Err(CliError::Config("seed list is empty".into()));
    }
    base.seed = seeds[0];

    if args.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let mut emit = args.emit.clone();
    emit.sort();
    emit.dedup();

    let plan = ExperimentPlan {
        base,
        sweep,
        seeds,
        out: args.out.clone(),
        emit,
        threads: args.threads,
    };
    for cell in plan.cells() {
        validate(cell.config.clone())
            .map_err(|e| CliError::Config(format!("{}: {e}", cell.identity().replace(',', " "))))?;
    }
    Ok(plan)
}

/// What one run contributes to the outputs.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub seed: u64,
    pub summary: MetricsSummary,
    pub packets: Vec<PacketRecord>,
    pub ticks: Option<RunResult>,
}

#[derive(Debug, Clone)]
pub struct CellOutput {
    pub cell: Cell,
    pub runs: Vec<RunOutput>,
    pub aggregate: AggregateSummary,
}

/// Runs every cell for every seed. Results keep plan order regardless of
/// how the work is scheduled.
pub fn execute(plan: &ExperimentPlan) -> Result<Vec<CellOutput>, CliError> {
    let cells = plan.cells();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| plan.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let keep_ticks = plan.emit.contains(&Emit::Ticks);
    let work = || {
        jobs.par_iter()
            .map(|&(c, seed)| {
                let cfg = ScenarioConfig {
                    seed,
                    ..cells[c].config.clone()
                };
                let result =
                    run(&cfg).map_err(|e| format!("{} seed {seed}: {e}", cells[c].identity()))?;
                Ok(RunOutput {
                    seed,
                    summary: summarize(&result),
                    packets: result.packets.clone(),
                    ticks: keep_ticks.then_some(result),
                })
            })
            .collect::<Result<Vec<_>, String>>()
    };
    let runs = match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(work),
        None => work(),
    }
    .map_err(CliError::Runtime)?;

    let mut runs = runs.into_iter();
    Ok(cells
        .into_iter()
        .map(|cell| {
            let runs: Vec<RunOutput> = runs.by_ref().take(plan.seeds.len()).collect();
            let summaries: Vec<MetricsSummary> = runs.iter().map(|r| r.summary.clone()).collect();
            CellOutput {
                cell,
                aggregate: aggregate(&summaries),
                runs,
            }
        })
        .collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn summary_fields(m: &MetricsSummary) -> [Option<f64>; 7] {
    [
        m.time_avg_se,
        m.jain,
        m.mean_thp_bps,
        m.p5_thp_bps,
        Some(m.completed_per_user),
        Some(m.tx_time_frac),
        Some(m.outside_frac),
    ]
}

fn aggregate_fields(a: &AggregateSummary) -> [(&'static str, Stat); 10] {
    [
        ("time_avg_se", a.time_avg_se),
        ("time_avg_system_se", a.time_avg_system_se),
        ("jain", a.jain),
        ("mean_thp_bps", a.mean_thp_bps),
        ("p5_thp_bps", a.p5_thp_bps),
        ("completed_per_user", a.completed_per_user),
        ("tx_time_frac", a.tx_time_frac),
        ("outside_frac", a.outside_frac),
        ("user_active_frac", a.user_active_frac),
        ("mean_tau_s", a.mean_tau_s),
    ]
}

pub fn summary_csv(outputs: &[CellOutput]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for cell in outputs {
        let id = cell.cell.identity();
        for r in &cell.runs {
            let vals: Vec<String> = summary_fields(&r.summary).iter().map(|v| opt(*v)).collect();
            let _ = writeln!(s, "{id},{},{}", r.seed, vals.join(","));
        }
        let a = &cell.aggregate;
        let means = [
            a.time_avg_se,
            a.jain,
            a.mean_thp_bps,
            a.p5_thp_bps,
            a.completed_per_user,
            a.tx_time_frac,
            a.outside_frac,
        ];
        let vals: Vec<String> = means.iter().map(|st| opt(st.mean)).collect();
        let _ = writeln!(s, "{id},mean,{}", vals.join(","));
    }
    s
}

pub fn aggregate_csv(outputs: &[CellOutput]) -> String {
    let mut s = String::from("dma,speed,accel,users,scheduler,metric,mean,std,n\n");
    for cell in outputs {
        let id = cell.cell.identity();
        for (name, st) in aggregate_fields(&cell.aggregate) {
            let _ = writeln!(s, "{id},{name},{},{},{}", opt(st.mean), opt(st.std), st.n);
        }
    }
    s
}

pub fn packets_csv(outputs: &[CellOutput]) -> String {
    let mut s = String::from(
        "dma,speed,accel,users,scheduler,seed,user,start_s,end_s,tau_s,bits,throughput_bps\n",
    );
    for cell in outputs {
        let id = cell.cell.identity();
        for r in &cell.runs {
            for p in &r.packets {
                let _ = writeln!(
                    s,
                    "{id},{},{},{},{},{},{},{}",
                    r.seed,
                    p.user,
                    p.start_s,
                    p.end_s,
                    p.tau_s,
                    p.bits,
                    p.throughput_bps()
                );
            }
        }
    }
    s
}

/// Seed-pooled CDFs per cell, downsampled to at most a few hundred steps.
pub fn cdfs_csv(outputs: &[CellOutput]) -> String {
    let mut s = String::from("dma,speed,accel,users,scheduler,metric,x,F\n");
    for cell in outputs {
        let id = cell.cell.identity();
        let pooled = |f: fn(&MetricsSummary) -> &Cdf| {
            let parts: Vec<Cdf> = cell.runs.iter().map(|r| f(&r.summary).clone()).collect();
            Cdf::merge(&parts).downsample(CDF_LEVELS)
        };
        for (name, cdf) in [
            ("ground_distance", pooled(|m| &m.cdfs.ground_distance)),
            ("elevation_deg", pooled(|m| &m.cdfs.elevation_deg)),
            ("p_los", pooled(|m| &m.cdfs.p_los)),
        ] {
            for (x, f) in cdf.points {
                let _ = writeln!(s, "{id},{name},{x},{f}");
            }
        }
    }
    s
}

pub fn ticks_csv(outputs: &[CellOutput]) -> String {
    let mut s = String::from(
        "dma,speed,accel,users,scheduler,seed,time_s,cell_se,system_se,active_users,drone_x,drone_y,outside\n",
    );
    for cell in outputs {
        let id = cell.cell.identity();
        for r in &cell.runs {
            let Some(result) = &r.ticks else { continue };
            for t in &result.ticks {
                let _ = writeln!(
                    s,
                    "{id},{},{},{},{},{},{},{},{}",
                    r.seed,
                    t.time_s,
                    opt(t.cell_se),
                    opt(t.system_se),
                    t.active_users(),
                    t.drone_position.x,
                    t.drone_position.y,
                    u8::from(t.drone_outside)
                );
            }
        }
    }
    s
}

pub fn write_outputs(plan: &ExperimentPlan, outputs: &[CellOutput]) -> Result<(), CliError> {
    let io = |e: std::io::Error, what: &Path| {
        CliError::Runtime(format!("cannot write {}: {e}", what.display()))
    };
    fs::create_dir_all(&plan.out).map_err(|e| io(e, &plan.out))?;
    let write = |name: &str, body: String| {
        let p = plan.out.join(name);
        fs::write(&p, body).map_err(|e| io(e, &p))
    };
    let json = serde_json::to_string_pretty(&plan.to_json())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write("run.json", json + "\n")?;
    for e in &plan.emit {
        match e {
            Emit::Summary => {
                write("summary.csv", summary_csv(outputs))?;
                write("aggregate.csv", aggregate_csv(outputs))?;
            }
            Emit::Packets => write("packets.csv", packets_csv(outputs))?,
            Emit::Cdfs => write("cdfs.csv", cdfs_csv(outputs))?,
            Emit::Ticks => write("ticks.csv", ticks_csv(outputs))?,
        }
    }
    Ok(())
}

/// Parses `argv`, runs the plan and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run_args(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_args(args: &Args) -> Result<(), CliError> {
    let plan = resolve_plan(args)?;
    let outputs = execute(&plan)?;
    write_outputs(&plan, &outputs)
}
