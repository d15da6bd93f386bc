//! Constellation instantiation, background battery evolution, task
//! generation and the experiment harnesses.
//!
//! Trials are independent: each one starts from the task-free background
//! trajectory of the constellation, and all heuristics of a trial see the
//! same snapshot and the same task. Trials run in parallel over a read-only
//! scenario, with per-trial random streams, so outputs depend only on the
//! configuration and the master seed.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig, UniformRange};
use crate::degradation::{DegradationParams, IntegrationSettings};
use crate::orbit::{walker_init, SunModel};
use crate::power::{harvested_power, BatteryState, HarvestCurve, SatelliteSpec};
use crate::rng::{self, uniform};
use crate::sched::{
    feasible_set, schedule_from, verify_outcome, BatteryTimeline, Fleet, GridSpec, HeuristicKind, TaskSpec,
    TrialOutcome,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invariant violated in trial {trial_id}: {detail}")]
    Invariant { trial_id: u64, detail: String },
    #[error("failed to start worker pool: {0}")]
    Pool(String),
}

/// The satellites of a scenario with their sampled attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub satellites: Vec<SatelliteSpec>,
    pub initial: Vec<BatteryState>,
    pub sun: SunModel,
}

impl Constellation {
    pub fn len(&self) -> usize {
        self.satellites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.satellites.is_empty()
    }
}

/// Builds the Walker constellation and draws per-satellite attributes from
/// the configured uniform distributions. Satellites are sampled in id order
/// from a single stream; each draws area, efficiency, operational power and
/// initial state of charge, in that order.
pub fn instantiate(cfg: &ScenarioConfig) -> Result<Constellation, ConfigError> {
    cfg.validate()?;
    let orbits = walker_init(&cfg.walker()).map_err(|e| ConfigError::invalid("constellation", e.to_string()))?;
    let s = &cfg.satellite;
    let mut rng = rng::stream(cfg.seed(), rng::CONSTELLATION, 0);
    let mut satellites = Vec::with_capacity(orbits.len());
    let mut initial = Vec::with_capacity(orbits.len());
    for orbit in orbits {
        let area = uniform(&mut rng, s.panel_area_m2.lo(), s.panel_area_m2.hi());
        let efficiency = uniform(&mut rng, s.panel_efficiency.lo(), s.panel_efficiency.hi());
        let op_power = uniform(&mut rng, s.operational_power_w.lo(), s.operational_power_w.hi());
        let soc = uniform(&mut rng, s.initial_soc.lo(), s.initial_soc.hi());
        satellites.push(SatelliteSpec {
            panel_area_m2: area,
            panel_efficiency: efficiency,
            operational_power_w: op_power,
            battery_capacity_wh: s.battery_capacity_wh,
            min_soc: s.min_soc,
            cpu_coeff: s.cpu_coeff,
            f_min_hz: s.f_min_hz,
            f_max_hz: s.f_max_hz,
            orbit,
        });
        initial.push(BatteryState::clamped(1.0 - soc));
    }
    Ok(Constellation {
        satellites,
        initial,
        sun: cfg.sun()?,
    })
}

/// Task-free battery trajectory of every satellite, precomputed on a grid.
///
/// Each satellite draws only its operational power while harvesting; the
/// depth of discharge advances by explicit Euler steps of length `dt` with
/// the net power evaluated at the start of each step.
#[derive(Debug, Clone)]
pub struct Background {
    dt: f64,
    steps: usize,
    grid: Vec<Vec<f64>>,
    satellites: Vec<SatelliteSpec>,
    curves: Vec<HarvestCurve>,
}

impl Background {
    pub fn compute(constellation: &Constellation, span_s: f64, dt: f64) -> Self {
        let steps = (span_s / dt).ceil() as usize;
        let curves: Vec<HarvestCurve> = constellation
            .satellites
            .iter()
            .map(|s| HarvestCurve::new(s, &constellation.sun))
            .collect();
        let grid = constellation
            .satellites
            .iter()
            .zip(&constellation.initial)
            .zip(&curves)
            .map(|((spec, init), curve)| {
                let inv_cap = 1.0 / spec.capacity_j();
                let mut dod = init.dod();
                let mut line = Vec::with_capacity(steps + 1);
                line.push(dod);
                for harvest in curve.samples(0.0, dt).take(steps) {
                    dod = (dod + (spec.operational_power_w - harvest) * inv_cap * dt).clamp(0.0, 1.0);
                    line.push(dod);
                }
                line
            })
            .collect();
        Self {
            dt,
            steps,
            grid,
            satellites: constellation.satellites.clone(),
            curves,
        }
    }

    pub fn span_s(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Depth of discharge of `satellite` at grid point `k`.
    pub fn grid_dod(&self, satellite: usize, k: usize) -> f64 {
        self.grid[satellite][k]
    }

    /// Battery state at time `t`: the last grid point before `t` advanced by a
    /// partial Euler step.
    pub fn background_state(&self, satellite: usize, t: f64) -> BatteryState {
        let k = ((t / self.dt).floor().max(0.0) as usize).min(self.steps);
        let tk = k as f64 * self.dt;
        let dod = self.grid[satellite][k];
        let rest = t - tk;
        if rest <= 0.0 {
            return BatteryState::clamped(dod);
        }
        let spec = &self.satellites[satellite];
        let harvest = self.curves[satellite].at(tk);
        BatteryState::clamped(dod + (spec.operational_power_w - harvest) / spec.capacity_j() * rest)
    }
}

impl BatteryTimeline for Background {
    fn state_at(&self, satellite: usize, t: f64) -> BatteryState {
        self.background_state(satellite, t)
    }
}

/// A constellation together with its background trajectory and physics settings.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub constellation: Constellation,
    pub background: Background,
    pub params: DegradationParams,
    pub settings: IntegrationSettings,
}

impl Scenario {
    /// Instantiates `config`; the background covers `[0, span_s]`.
    pub fn build(config: &ScenarioConfig, span_s: f64) -> Result<Self, ConfigError> {
        let constellation = instantiate(config)?;
        Ok(Self::from_constellation(config, constellation, span_s))
    }

    /// Uses an explicit constellation instead of sampling one.
    pub fn from_constellation(config: &ScenarioConfig, constellation: Constellation, span_s: f64) -> Self {
        let dt = config.simulation.integration_dt_s;
        let background = Background::compute(&constellation, span_s, dt);
        Self {
            config: config.clone(),
            constellation,
            background,
            params: config.degradation,
            settings: IntegrationSettings {
                dt_s: dt,
                ..IntegrationSettings::default()
            },
        }
    }

    pub fn fleet(&self) -> Fleet<'_> {
        Fleet {
            satellites: &self.constellation.satellites,
            timeline: &self.background,
            sun: self.constellation.sun,
            params: self.params,
            settings: self.settings,
        }
    }
}

/// Draws `count` tasks: arrival uniform over the horizon, workload and time
/// budget from their configured ranges, deadline = arrival + budget.
pub fn generate_tasks<R: rand::Rng + ?Sized>(cfg: &ScenarioConfig, count: usize, rng: &mut R) -> Vec<TaskSpec> {
    let horizon = cfg.simulation.horizon_s;
    let w = cfg.tasks.workload_cycles;
    let b = cfg.tasks.budget_s;
    (0..count)
        .map(|_| {
            let arrival = uniform(rng, 0.0, horizon);
            let workload = uniform(rng, w.lo(), w.hi());
            let budget = uniform(rng, b.lo(), b.hi());
            TaskSpec::new(workload, arrival, arrival + budget).expect("sampled task is valid")
        })
        .collect()
}

/// One heuristic's outcome on one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub trial_id: u64,
    pub task: TaskSpec,
    pub outcome: TrialOutcome,
}

impl TrialResult {
    pub fn heuristic(&self) -> HeuristicKind {
        self.outcome.heuristic
    }

    pub fn cost(&self) -> Option<f64> {
        self.outcome.cost.map(|c| c.life_consumed())
    }
}

/// Aggregate over the feasible trials of one heuristic at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub sweep_value: f64,
    pub heuristic: HeuristicKind,
    /// `None` when no trial was feasible.
    pub mean_degradation: Option<f64>,
    /// Sample standard deviation; `None` when no trial was feasible.
    pub std_degradation: Option<f64>,
    pub n_feasible: usize,
    pub n_infeasible: usize,
}

/// How trials are executed.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub heuristics: Vec<HeuristicKind>,
    pub grid: GridSpec,
    /// Worker count; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            heuristics: HeuristicKind::SELECTORS.to_vec(),
            grid: GridSpec::default(),
            threads: None,
        }
    }
}

/// Runs every heuristic on every task. `first_trial_id` offsets the trial ids
/// (and hence the per-trial random streams). Results are ordered by trial,
/// then by the order of `opts.heuristics`.
pub fn run_trials(
    scenario: &Scenario,
    tasks: &[TaskSpec],
    first_trial_id: u64,
    opts: &RunOptions,
) -> Result<Vec<TrialResult>, SimError> {
    let seed = scenario.config.seed();
    let fleet = scenario.fleet();
    let needs_feasible = opts.heuristics.iter().any(|h| *h != HeuristicKind::GridBaseline);
    let run_one = |(offset, task): (usize, &TaskSpec)| -> Result<Vec<TrialResult>, SimError> {
        let trial_id = first_trial_id + offset as u64;
        let feasible = if needs_feasible {
            feasible_set(&fleet, task)
        } else {
            Vec::new()
        };
        opts.heuristics
            .iter()
            .map(|&kind| {
                let stream_name = match kind {
                    HeuristicKind::MinNetEnergyCost => rng::NET_ENERGY_SELECTION,
                    _ => rng::RANDOM_SELECTION,
                };
                let mut trial_rng = rng::stream(seed, stream_name, trial_id);
                let outcome = schedule_from(kind, &fleet, task, &feasible, opts.grid, &mut trial_rng);
                verify_outcome(&fleet, task, &outcome).map_err(|detail| SimError::Invariant { trial_id, detail })?;
                Ok(TrialResult {
                    trial_id,
                    task: *task,
                    outcome,
                })
            })
            .collect()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    let per_trial: Vec<Result<Vec<TrialResult>, SimError>> =
        pool.install(|| tasks.par_iter().enumerate().map(run_one).collect());
    let mut out = Vec::with_capacity(tasks.len() * opts.heuristics.len());
    for trial in per_trial {
        out.extend(trial?);
    }
    Ok(out)
}

/// Per-heuristic aggregate of `results`, in the order of `heuristics`.
pub fn aggregate(results: &[TrialResult], heuristics: &[HeuristicKind], sweep_value: f64) -> Vec<AggregateRow> {
    heuristics
        .iter()
        .map(|&h| {
            let costs: Vec<f64> = results
                .iter()
                .filter(|r| r.heuristic() == h)
                .filter_map(TrialResult::cost)
                .collect();
            let total = results.iter().filter(|r| r.heuristic() == h).count();
            let (mean, std) = mean_and_std(&costs);
            AggregateRow {
                sweep_value,
                heuristic: h,
                mean_degradation: mean,
                std_degradation: std,
                n_feasible: costs.len(),
                n_infeasible: total - costs.len(),
            }
        })
        .collect()
}

fn mean_and_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (Some(mean), Some(0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// Output of an experiment: per-trial results and the aggregate table.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub trials: Vec<TrialResult>,
    pub aggregate: Vec<AggregateRow>,
}

impl ExperimentReport {
    /// Aggregate row for `heuristic` at `sweep_value`.
    pub fn row(&self, sweep_value: f64, heuristic: HeuristicKind) -> Option<&AggregateRow> {
        self.aggregate
            .iter()
            .find(|r| r.heuristic == heuristic && r.sweep_value == sweep_value)
    }
}

/// Regime comparison: the constellation is sampled with panel efficiencies
/// drawn from `efficiency`, and `n_tasks` tasks from the configured
/// distributions are scheduled by every heuristic. The aggregate rows carry
/// the midpoint of the efficiency range as their sweep value.
pub fn run_regime_experiment(
    cfg: &ScenarioConfig,
    efficiency: UniformRange,
    n_tasks: usize,
    opts: &RunOptions,
) -> Result<ExperimentReport, SimError> {
    let mut cfg = cfg.clone();
    cfg.satellite.panel_efficiency = efficiency;
    cfg.tasks.count = n_tasks;
    cfg.validate()?;
    let span = cfg.simulation.horizon_s + cfg.tasks.budget_s.hi();
    let scenario = Scenario::build(&cfg, span)?;
    run_regime_on(&scenario, n_tasks, efficiency.midpoint(), opts)
}

/// Regime comparison on an already built scenario.
pub fn run_regime_on(
    scenario: &Scenario,
    n_tasks: usize,
    sweep_value: f64,
    opts: &RunOptions,
) -> Result<ExperimentReport, SimError> {
    let mut task_rng = rng::stream(scenario.config.seed(), rng::TASKS, 0);
    let tasks = generate_tasks(&scenario.config, n_tasks, &mut task_rng);
    let trials = run_trials(scenario, &tasks, 0, opts)?;
    let aggregate = aggregate(&trials, &opts.heuristics, sweep_value);
    Ok(ExperimentReport { trials, aggregate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Vary the workload at a fixed time budget.
    Workload,
    /// Vary the time budget at a fixed workload.
    Budget,
}

/// A one-dimensional parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub trials_per_point: usize,
    /// The parameter held fixed: the time budget for a workload sweep, the
    /// workload for a budget sweep.
    pub fixed: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.values.is_empty() {
            return Err(ConfigError::invalid("grid", "sweep grid must not be empty"));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ConfigError::invalid("grid", "sweep values must be positive"));
        }
        if self.values.windows(2).any(|w| w[0] > w[1]) {
            return Err(ConfigError::invalid("grid", "sweep values must be sorted"));
        }
        if self.trials_per_point == 0 {
            return Err(ConfigError::invalid("trials", "must be positive"));
        }
        if !(self.fixed.is_finite() && self.fixed > 0.0) {
            let key = match self.parameter {
                SweepParameter::Workload => "budget",
                SweepParameter::Budget => "workload",
            };
            return Err(ConfigError::invalid(key, "must be positive"));
        }
        Ok(())
    }

    fn task(&self, value: f64, arrival: f64) -> TaskSpec {
        let (workload, budget) = match self.parameter {
            SweepParameter::Workload => (value, self.fixed),
            SweepParameter::Budget => (self.fixed, value),
        };
        TaskSpec::new(workload, arrival, arrival + budget).expect("validated sweep task")
    }

    /// Longest time budget of any task in the sweep.
    pub fn max_budget(&self) -> f64 {
        match self.parameter {
            SweepParameter::Workload => self.fixed,
            SweepParameter::Budget => self.values.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Parameter sweep over the configured constellation. Every grid value is
/// evaluated on the same `trials_per_point` arrival times (drawn uniformly
/// over the horizon), so differences between grid values are paired.
pub fn run_sweep(cfg: &ScenarioConfig, sweep: &SweepSpec, opts: &RunOptions) -> Result<ExperimentReport, SimError> {
    sweep.validate()?;
    let span = cfg.simulation.horizon_s + sweep.max_budget();
    let scenario = Scenario::build(cfg, span)?;
    run_sweep_on(&scenario, sweep, opts)
}

/// Parameter sweep on an already built scenario.
pub fn run_sweep_on(scenario: &Scenario, sweep: &SweepSpec, opts: &RunOptions) -> Result<ExperimentReport, SimError> {
    sweep.validate()?;
    let mut arrival_rng = rng::stream(scenario.config.seed(), rng::TASKS, 1);
    let horizon = scenario.config.simulation.horizon_s;
    let arrivals: Vec<f64> = (0..sweep.trials_per_point)
        .map(|_| uniform(&mut arrival_rng, 0.0, horizon))
        .collect();
    let mut trials = Vec::new();
    let mut rows = Vec::new();
    for (point, &value) in sweep.values.iter().enumerate() {
        let tasks: Vec<TaskSpec> = arrivals.iter().map(|&a| sweep.task(value, a)).collect();
        let first = (point * sweep.trials_per_point) as u64;
        let point_trials = run_trials(scenario, &tasks, first, opts)?;
        rows.extend(aggregate(&point_trials, &opts.heuristics, value));
        trials.extend(point_trials);
    }
    Ok(ExperimentReport {
        trials,
        aggregate: rows,
    })
}

/// `n` values from `lo` to `hi` inclusive, evenly spaced.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `n` values from `lo` to `hi` inclusive, evenly spaced in log scale.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| match k {
                    0 => lo,
                    k if k == n - 1 => hi,
                    k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

/// Harvested power of every satellite at time `t`, for diagnostics.
pub fn harvest_snapshot(constellation: &Constellation, t: f64) -> Vec<f64> {
    constellation
        .satellites
        .iter()
        .map(|s| harvested_power(s, t, &constellation.sun))
        .collect()
}
