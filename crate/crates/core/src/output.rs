//! Run artifacts: per-trial and aggregate CSV tables and the JSON manifest.
//!
//! Floating-point fields use the shortest decimal representation that parses
//! back to the same value. Missing values (no satellite, no cost, no feasible
//! trial) are empty fields.

use std::fmt::Display;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{ScenarioConfig, UniformRange};
use crate::orbit::OrbitParams;
use crate::sched::{GridSpec, HeuristicKind};
use crate::sim::{AggregateRow, Constellation, SweepSpec, TrialResult};

pub const TRIALS_FILE: &str = "trials.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const TRIALS_HEADER: &str = "trial_id,heuristic,task_workload_cycles,task_arrival_s,task_budget_s,satellite_id,freq_hz,start_s,duration_s,degradation,infeasible";
pub const AGGREGATE_HEADER: &str = "sweep_value,heuristic,mean_degradation,std_degradation,n_feasible,n_infeasible";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{0} already exists; pass --force to overwrite")]
    ManifestExists(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trials<W: Write>(mut w: W, trials: &[TrialResult]) -> io::Result<()> {
    writeln!(w, "{TRIALS_HEADER}")?;
    for r in trials {
        let plan = r.outcome.plan;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.trial_id,
            r.heuristic(),
            r.task.workload_cycles,
            r.task.arrival_s,
            r.task.budget_s(),
            opt(plan.map(|p| p.satellite_id)),
            opt(plan.map(|p| p.freq_hz)),
            opt(plan.map(|p| p.start_s)),
            opt(plan.map(|p| p.duration_s)),
            opt(r.cost()),
            r.outcome.infeasible(),
        )?;
    }
    w.flush()
}

pub fn write_aggregate<W: Write>(mut w: W, rows: &[AggregateRow]) -> io::Result<()> {
    writeln!(w, "{AGGREGATE_HEADER}")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.sweep_value,
            row.heuristic,
            opt(row.mean_degradation),
            opt(row.std_degradation),
            row.n_feasible,
            row.n_infeasible,
        )?;
    }
    w.flush()
}

/// What a run computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentRecord {
    Regime { efficiency: UniformRange, tasks: usize },
    Sweep(SweepSpec),
}

/// Sampled attributes of one satellite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatelliteRecord {
    pub id: usize,
    pub plane: usize,
    pub slot: usize,
    pub raan_rad: f64,
    pub arg_latitude0_rad: f64,
    pub panel_area_m2: f64,
    pub panel_efficiency: f64,
    pub operational_power_w: f64,
    pub initial_soc: f64,
}

/// Everything needed to rerun an experiment and obtain identical tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: Vec<String>,
    pub seed: u64,
    pub experiment: ExperimentRecord,
    pub heuristics: Vec<HeuristicKind>,
    pub grid: GridSpec,
    pub config: ScenarioConfig,
    pub satellites: Vec<SatelliteRecord>,
}

impl RunManifest {
    pub fn new(
        command: Vec<String>,
        config: &ScenarioConfig,
        experiment: ExperimentRecord,
        heuristics: &[HeuristicKind],
        grid: GridSpec,
        constellation: &Constellation,
    ) -> Self {
        let per_plane = config.constellation.sats_per_plane as usize;
        let satellites = constellation
            .satellites
            .iter()
            .zip(&constellation.initial)
            .enumerate()
            .map(|(id, (s, init))| {
                let OrbitParams {
                    raan_rad,
                    arg_latitude0_rad,
                    ..
                } = s.orbit;
                SatelliteRecord {
                    id,
                    plane: id / per_plane,
                    slot: id % per_plane,
                    raan_rad,
                    arg_latitude0_rad,
                    panel_area_m2: s.panel_area_m2,
                    panel_efficiency: s.panel_efficiency,
                    operational_power_w: s.operational_power_w,
                    initial_soc: init.soc(),
                }
            })
            .collect();
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.seed(),
            experiment,
            heuristics: heuristics.to_vec(),
            grid,
            config: config.clone(),
            satellites,
        }
    }
}

/// Creates `dir` if needed and fails if it already holds a manifest, unless
/// `force` is set.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = dir.join(MANIFEST_FILE);
    if manifest.exists() && !force {
        return Err(OutputError::ManifestExists(manifest));
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<(), OutputError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(io_err(path))
}

/// Writes the trial table, the aggregate table and the manifest into `dir`.
/// The manifest is written last, so its presence marks a completed run.
pub fn write_run(
    dir: &Path,
    trials: &[TrialResult],
    aggregate: &[AggregateRow],
    manifest: &RunManifest,
    force: bool,
) -> Result<(), OutputError> {
    prepare_dir(dir, force)?;
    write_file(&dir.join(TRIALS_FILE), |w| write_trials(w, trials))?;
    write_file(&dir.join(AGGREGATE_FILE), |w| write_aggregate(w, aggregate))?;
    write_file(&dir.join(MANIFEST_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, manifest).map_err(io::Error::other)?;
        writeln!(w)?;
        w.flush()
    })
}
