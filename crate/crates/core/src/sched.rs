//! Single-task scheduling: feasibility, the local frequency policy,
//! satellite-selection heuristics and a grid-search baseline.
//!
//! Every heuristic picks a satellite from the feasible set. The execution
//! parameters on the chosen satellite always come from [`local_policy`]:
//! start immediately and run at the lowest frequency that meets the
//! deadline. The grid baseline additionally searches start times and
//! frequencies and is a discretized near-optimum, not an exact solution.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degradation::{
    integrate_steps, satellite_steps, task_degradation, DegradationCost, DegradationParams, DegradationReport,
    IntegrationSettings,
};
use crate::orbit::SunModel;
use crate::power::{harvested_power, task_power, BatteryState, SatelliteSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("workload must be positive, got {0} cycles")]
    InvalidWorkload(f64),
    #[error("deadline {deadline_s} s must be later than arrival {arrival_s} s")]
    InvalidWindow { arrival_s: f64, deadline_s: f64 },
}

/// A computational task: `workload_cycles` to finish within `[arrival_s, deadline_s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub workload_cycles: f64,
    pub arrival_s: f64,
    pub deadline_s: f64,
}

impl TaskSpec {
    pub fn new(workload_cycles: f64, arrival_s: f64, deadline_s: f64) -> Result<Self, TaskError> {
        if !(workload_cycles > 0.0 && workload_cycles.is_finite()) {
            return Err(TaskError::InvalidWorkload(workload_cycles));
        }
        if deadline_s.is_nan() || arrival_s.is_nan() || deadline_s <= arrival_s {
            return Err(TaskError::InvalidWindow { arrival_s, deadline_s });
        }
        Ok(Self {
            workload_cycles,
            arrival_s,
            deadline_s,
        })
    }

    pub fn budget_s(&self) -> f64 {
        self.deadline_s - self.arrival_s
    }
}

/// Where, when and how fast a task runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub satellite_id: usize,
    pub start_s: f64,
    pub freq_hz: f64,
    pub duration_s: f64,
    pub task_power_w: f64,
}

impl ExecutionPlan {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicKind {
    Random,
    DodFirst,
    MinPowerDeficit,
    MinNetEnergyCost,
    GridBaseline,
}

impl HeuristicKind {
    /// The four selection heuristics, excluding the grid baseline.
    pub const SELECTORS: [HeuristicKind; 4] = [
        HeuristicKind::Random,
        HeuristicKind::DodFirst,
        HeuristicKind::MinPowerDeficit,
        HeuristicKind::MinNetEnergyCost,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HeuristicKind::Random => "random",
            HeuristicKind::DodFirst => "dod-first",
            HeuristicKind::MinPowerDeficit => "min-power-deficit",
            HeuristicKind::MinNetEnergyCost => "min-net-energy",
            HeuristicKind::GridBaseline => "grid",
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown heuristic `{0}` (expected random, dod-first, min-power-deficit, min-net-energy or grid)")]
pub struct UnknownHeuristic(pub String);

impl FromStr for HeuristicKind {
    type Err = UnknownHeuristic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(HeuristicKind::Random),
            "dod-first" => Ok(HeuristicKind::DodFirst),
            "min-power-deficit" => Ok(HeuristicKind::MinPowerDeficit),
            "min-net-energy" => Ok(HeuristicKind::MinNetEnergyCost),
            "grid" => Ok(HeuristicKind::GridBaseline),
            other => Err(UnknownHeuristic(other.to_string())),
        }
    }
}

/// Why a satellite cannot take a task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasible {
    /// The time budget needs a frequency above the hardware maximum.
    Frequency { required_hz: f64, max_hz: f64 },
    /// The plan would drain the battery below its minimum state of charge.
    Battery { peak_dod: f64 },
}

/// Battery state of every satellite as a function of time, without tasks.
pub trait BatteryTimeline: Sync {
    fn state_at(&self, satellite: usize, t: f64) -> BatteryState;
}

/// A timeline frozen at fixed states.
impl BatteryTimeline for [BatteryState] {
    fn state_at(&self, satellite: usize, _t: f64) -> BatteryState {
        self[satellite]
    }
}

impl BatteryTimeline for Vec<BatteryState> {
    fn state_at(&self, satellite: usize, _t: f64) -> BatteryState {
        self[satellite]
    }
}

/// Everything a scheduling decision reads: the fleet, its battery timeline
/// and the physical models.
#[derive(Clone, Copy)]
pub struct Fleet<'a> {
    pub satellites: &'a [SatelliteSpec],
    pub timeline: &'a dyn BatteryTimeline,
    pub sun: SunModel,
    pub params: DegradationParams,
    pub settings: IntegrationSettings,
}

/// A satellite that can run the task under the local policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub satellite_id: usize,
    /// Depth of discharge at the task arrival.
    pub dod: f64,
    /// Harvested minus operational power at the task arrival, watts.
    pub surplus_w: f64,
    pub plan: ExecutionPlan,
    pub report: DegradationReport,
}

impl Candidate {
    pub fn cost(&self) -> DegradationCost {
        self.report.cost
    }

    pub fn net_energy_j(&self) -> f64 {
        self.report.net_energy_j
    }
}

/// Plan on `spec` at frequency `freq_hz` starting at `start_s`, or `None` when
/// the frequency is outside the hardware range. The duration is `W / f`,
/// except that the deadline-bound frequency ends exactly at the deadline.
fn plan_at(
    spec: &SatelliteSpec,
    satellite_id: usize,
    task: &TaskSpec,
    start_s: f64,
    freq_hz: f64,
) -> Option<ExecutionPlan> {
    let power = task_power(spec, freq_hz).ok()?;
    let window = task.deadline_s - start_s;
    let exact = task.workload_cycles / window;
    let mut duration = if freq_hz == exact {
        window
    } else {
        task.workload_cycles / freq_hz
    };
    if start_s + duration > task.deadline_s {
        duration = window;
    }
    Some(ExecutionPlan {
        satellite_id,
        start_s,
        freq_hz,
        duration_s: duration,
        task_power_w: power,
    })
}

/// Lowest frequency that lets the task finish by its deadline when started
/// at `start_s`, clamped up to the hardware minimum.
fn lowest_frequency(spec: &SatelliteSpec, task: &TaskSpec, start_s: f64) -> Result<f64, Infeasible> {
    let required = task.workload_cycles / (task.deadline_s - start_s);
    if required > spec.f_max_hz {
        return Err(Infeasible::Frequency {
            required_hz: required,
            max_hz: spec.f_max_hz,
        });
    }
    Ok(required.max(spec.f_min_hz))
}

fn simulate(fleet: &Fleet<'_>, spec: &SatelliteSpec, plan: &ExecutionPlan, initial: BatteryState) -> DegradationReport {
    let settings = IntegrationSettings {
        stop_on_violation: true,
        ..fleet.settings
    };
    task_degradation(spec, &fleet.params, plan, initial, &fleet.sun, &settings)
        .expect("plan frequency lies within the hardware range")
}

/// The common local policy: start at arrival, run at the lowest frequency
/// that meets the deadline, and verify battery safety by forward simulation.
pub fn local_policy(
    fleet: &Fleet<'_>,
    satellite_id: usize,
    task: &TaskSpec,
    initial: BatteryState,
) -> Result<(ExecutionPlan, DegradationReport), Infeasible> {
    let spec = &fleet.satellites[satellite_id];
    let freq = lowest_frequency(spec, task, task.arrival_s)?;
    let plan = plan_at(spec, satellite_id, task, task.arrival_s, freq)
        .expect("lowest frequency lies within the hardware range");
    let report = simulate(fleet, spec, &plan, initial);
    if report.feasible {
        Ok((plan, report))
    } else {
        Err(Infeasible::Battery {
            peak_dod: report.peak_dod,
        })
    }
}

/// All satellites on which the local policy yields a feasible plan, in id order.
pub fn feasible_set(fleet: &Fleet<'_>, task: &TaskSpec) -> Vec<Candidate> {
    let t_now = task.arrival_s;
    fleet
        .satellites
        .iter()
        .enumerate()
        .filter_map(|(id, spec)| {
            let state = fleet.timeline.state_at(id, t_now);
            let (plan, report) = local_policy(fleet, id, task, state).ok()?;
            Some(Candidate {
                satellite_id: id,
                dod: state.dod(),
                surplus_w: harvested_power(spec, t_now, &fleet.sun) - spec.operational_power_w,
                plan,
                report,
            })
        })
        .collect()
}

/// Uniform draw from the feasible set.
pub fn select_random<'c, R: Rng + ?Sized>(feasible: &'c [Candidate], rng: &mut R) -> Option<&'c Candidate> {
    if feasible.is_empty() {
        return None;
    }
    Some(&feasible[rng.random_range(0..feasible.len())])
}

/// Lowest depth of discharge; ties go to the lowest satellite id.
pub fn select_dod_first(feasible: &[Candidate]) -> Option<&Candidate> {
    argbest(feasible, |c| c.dod, |a, b| a < b)
}

/// Largest instantaneous power surplus; ties go to the lowest satellite id.
pub fn select_min_power_deficit(feasible: &[Candidate]) -> Option<&Candidate> {
    argbest(feasible, |c| c.surplus_w, |a, b| a > b)
}

/// Net energy heuristic. Candidates whose plan harvests at least as much as
/// it consumes form a surplus list and one of them is drawn uniformly;
/// otherwise the smallest positive net energy wins (ties by lowest id).
pub fn select_min_net_energy<'c, R: Rng + ?Sized>(feasible: &'c [Candidate], rng: &mut R) -> Option<&'c Candidate> {
    let surplus: Vec<&Candidate> = feasible.iter().filter(|c| c.net_energy_j() <= 0.0).collect();
    if !surplus.is_empty() {
        return Some(surplus[rng.random_range(0..surplus.len())]);
    }
    argbest(feasible, Candidate::net_energy_j, |a, b| a < b)
}

fn argbest<F, B>(candidates: &[Candidate], key: F, better: B) -> Option<&Candidate>
where
    F: Fn(&Candidate) -> f64,
    B: Fn(f64, f64) -> bool,
{
    let mut best: Option<&Candidate> = None;
    for c in candidates {
        match best {
            Some(b) if !(better(key(c), key(b)) || (key(c) == key(b) && c.satellite_id < b.satellite_id)) => {}
            _ => best = Some(c),
        }
    }
    best
}

/// Net energy (consumed minus harvested, joules) of executing `plan` on `spec`,
/// integrated with midpoint samples at step `dt`.
pub fn net_energy(spec: &SatelliteSpec, plan: &ExecutionPlan, sun: &SunModel, dt: f64) -> f64 {
    let consumed = plan.task_power_w + spec.operational_power_w;
    satellite_steps(spec, sun, consumed, plan.start_s, plan.duration_s, dt)
        .map(|(h, deficit)| h * deficit)
        .sum()
}

/// Resolution of the grid-search baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_start: usize,
    pub n_freq: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_start: 5, n_freq: 5 }
    }
}

/// Best plan found by the grid baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridChoice {
    pub plan: ExecutionPlan,
    pub report: DegradationReport,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        if n == 1 || k == 0 {
            lo
        } else if k == n - 1 {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    })
}

/// Exhaustive search over satellites, evenly spaced start times in
/// `[t_now, t_ddl - W / f_max]` and evenly spaced frequencies between the
/// deadline-bound minimum and `f_max`. Returns the cheapest battery-safe
/// plan; ties prefer the earliest start, then the lowest frequency, then the
/// lowest satellite id. The first grid point of every satellite is the
/// local-policy plan.
pub fn grid_baseline(fleet: &Fleet<'_>, task: &TaskSpec, grid: GridSpec) -> Option<GridChoice> {
    assert!(
        grid.n_start >= 1 && grid.n_freq >= 1,
        "grid must have at least one point per axis"
    );
    let mut best: Option<GridChoice> = None;
    for (id, spec) in fleet.satellites.iter().enumerate() {
        let latest = task.deadline_s - task.workload_cycles / spec.f_max_hz;
        if latest < task.arrival_s {
            continue;
        }
        for start in linspace(task.arrival_s, latest, grid.n_start) {
            let Ok(lowest) = lowest_frequency(spec, task, start) else {
                continue;
            };
            let state = fleet.timeline.state_at(id, start);
            for freq in linspace(lowest, spec.f_max_hz, grid.n_freq) {
                let Some(plan) = plan_at(spec, id, task, start, freq) else {
                    continue;
                };
                let report = simulate(fleet, spec, &plan, state);
                if !report.feasible {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let key = (report.cost.life_consumed(), start, freq, id);
                        let incumbent = (
                            b.report.cost.life_consumed(),
                            b.plan.start_s,
                            b.plan.freq_hz,
                            b.plan.satellite_id,
                        );
                        key.partial_cmp(&incumbent) == Some(std::cmp::Ordering::Less)
                    }
                };
                if better {
                    best = Some(GridChoice { plan, report });
                }
            }
        }
    }
    best
}

/// Result of one heuristic on one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub heuristic: HeuristicKind,
    pub plan: Option<ExecutionPlan>,
    pub cost: Option<DegradationCost>,
}

impl TrialOutcome {
    pub fn unschedulable(heuristic: HeuristicKind) -> Self {
        Self {
            heuristic,
            plan: None,
            cost: None,
        }
    }

    pub fn infeasible(&self) -> bool {
        self.plan.is_none()
    }

    pub fn satellite_id(&self) -> Option<usize> {
        self.plan.map(|p| p.satellite_id)
    }

    fn chosen(heuristic: HeuristicKind, candidate: Option<&Candidate>) -> Self {
        match candidate {
            Some(c) => Self {
                heuristic,
                plan: Some(c.plan),
                cost: Some(c.cost()),
            },
            None => Self::unschedulable(heuristic),
        }
    }
}

/// Applies `kind` to a precomputed feasible set. `rng` is consumed only by the
/// randomized heuristics.
pub fn schedule_from<R: Rng + ?Sized>(
    kind: HeuristicKind,
    fleet: &Fleet<'_>,
    task: &TaskSpec,
    feasible: &[Candidate],
    grid: GridSpec,
    rng: &mut R,
) -> TrialOutcome {
    match kind {
        HeuristicKind::Random => TrialOutcome::chosen(kind, select_random(feasible, rng)),
        HeuristicKind::DodFirst => TrialOutcome::chosen(kind, select_dod_first(feasible)),
        HeuristicKind::MinPowerDeficit => TrialOutcome::chosen(kind, select_min_power_deficit(feasible)),
        HeuristicKind::MinNetEnergyCost => TrialOutcome::chosen(kind, select_min_net_energy(feasible, rng)),
        HeuristicKind::GridBaseline => match grid_baseline(fleet, task, grid) {
            Some(choice) => TrialOutcome {
                heuristic: kind,
                plan: Some(choice.plan),
                cost: Some(choice.report.cost),
            },
            None => TrialOutcome::unschedulable(kind),
        },
    }
}

/// Schedules one task with one heuristic.
pub fn schedule<R: Rng + ?Sized>(
    kind: HeuristicKind,
    fleet: &Fleet<'_>,
    task: &TaskSpec,
    grid: GridSpec,
    rng: &mut R,
) -> TrialOutcome {
    let feasible = if kind == HeuristicKind::GridBaseline {
        Vec::new()
    } else {
        feasible_set(fleet, task)
    };
    schedule_from(kind, fleet, task, &feasible, grid, rng)
}

/// Replays `outcome` from scratch and checks the deadline and minimum-charge
/// constraints. Used as a per-trial assertion by the experiment harness.
pub fn verify_outcome(fleet: &Fleet<'_>, task: &TaskSpec, outcome: &TrialOutcome) -> Result<(), String> {
    let Some(plan) = outcome.plan else {
        return Ok(());
    };
    if plan.start_s < task.arrival_s {
        return Err(format!(
            "{}: start {} before arrival {}",
            outcome.heuristic, plan.start_s, task.arrival_s
        ));
    }
    if plan.end_s() > task.deadline_s {
        return Err(format!(
            "{}: end {} after deadline {}",
            outcome.heuristic,
            plan.end_s(),
            task.deadline_s
        ));
    }
    let spec = &fleet.satellites[plan.satellite_id];
    if !(spec.f_min_hz..=spec.f_max_hz).contains(&plan.freq_hz) {
        return Err(format!(
            "{}: frequency {} out of range",
            outcome.heuristic, plan.freq_hz
        ));
    }
    let initial = fleet.timeline.state_at(plan.satellite_id, plan.start_s);
    let consumed = plan.task_power_w + spec.operational_power_w;
    let replay = integrate_steps(
        &fleet.params,
        spec.capacity_j(),
        spec.max_dod(),
        initial,
        &IntegrationSettings {
            stop_on_violation: false,
            ..fleet.settings
        },
        satellite_steps(
            spec,
            &fleet.sun,
            consumed,
            plan.start_s,
            plan.duration_s,
            fleet.settings.dt_s,
        ),
    );
    if !replay.feasible {
        return Err(format!(
            "{}: satellite {} reaches depth of discharge {} beyond {}",
            outcome.heuristic,
            plan.satellite_id,
            replay.peak_dod,
            spec.max_dod()
        ));
    }
    Ok(())
}
