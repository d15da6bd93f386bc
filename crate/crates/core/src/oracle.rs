//! Self-checks against closed-form references, run by `scpn oracle-check`.
//!
//! Each check compares the numerical machinery with an independent
//! computation: the integrated wear against differences of its antiderivative,
//! the wear rate against a finite-difference derivative, the eclipse model
//! against the shadow-cylinder arc, and every heuristic against the
//! exhaustive grid baseline on a small constellation.

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::degradation::{
    instantaneous_rate, integrate_steps, integrated_consumption, DegradationParams, IntegrationSettings,
};
use crate::orbit::{eclipse_fraction, OrbitParams, SunModel};
use crate::power::BatteryState;
use crate::rng::{self, uniform};
use crate::sched::{feasible_set, schedule_from, verify_outcome, GridSpec, HeuristicKind};
use crate::sim::{generate_tasks, Scenario};

/// Battery capacity used for synthetic power profiles, joules (1200 Wh).
pub const PROFILE_CAPACITY_J: f64 = 1200.0 * 3600.0;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub seed: u64,
    pub dt_s: f64,
    pub profiles: usize,
    pub tasks: usize,
    /// Flips the sign of the battery update in the wear integrator, to show
    /// that the checks catch it.
    pub inject_sign_flip: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            seed: crate::config::DEFAULT_SEED,
            dt_s: 1.0,
            profiles: 100,
            tasks: 50,
            inject_sign_flip: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Largest observed deviation, where the check has one.
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub checks: Vec<CheckResult>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const DERIVATIVE: &str = "derivative-identity";
pub const ANALYTIC: &str = "analytic-profiles";
pub const PATH_DEPENDENCE: &str = "path-dependence";
pub const ECLIPSE: &str = "eclipse-fraction";
pub const GRID_DOMINANCE: &str = "grid-dominance";

/// A power profile: constant net deficit (watts) over whole-second segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub initial_dod: f64,
    pub segments: Vec<(u32, f64)>,
}

/// Draws a profile of 3 to 12 segments lasting 1 to 900 s each, with net
/// deficits between -400 W and +600 W.
pub fn random_profile<R: Rng + ?Sized>(rng: &mut R) -> Profile {
    let n = rng.random_range(3..=12);
    Profile {
        initial_dod: uniform(rng, 0.0, 0.6),
        segments: (0..n)
            .map(|_| (rng.random_range(1..=900u32), uniform(rng, -400.0, 600.0)))
            .collect(),
    }
}

/// Exact wear of `profile`: the antiderivative difference over every
/// discharging stretch, with the depth of discharge clamped to `[0, 1]`.
pub fn profile_oracle(params: &DegradationParams, capacity_j: f64, profile: &Profile) -> f64 {
    let mut d = profile.initial_dod;
    let mut cost = 0.0;
    for &(secs, deficit) in &profile.segments {
        let next = (d + deficit * f64::from(secs) / capacity_j).clamp(0.0, 1.0);
        if next > d {
            cost += integrated_consumption(params, next) - integrated_consumption(params, d);
        }
        d = next;
    }
    cost
}

/// Numerical wear of `profile` at step `dt`, via the production integrator.
pub fn profile_numeric(
    params: &DegradationParams,
    capacity_j: f64,
    profile: &Profile,
    settings: &IntegrationSettings,
) -> f64 {
    let dt = settings.dt_s;
    let steps = profile.segments.iter().flat_map(move |&(secs, deficit)| {
        let n = (f64::from(secs) / dt).round() as usize;
        let h = f64::from(secs) / n as f64;
        std::iter::repeat_n((h, deficit), n)
    });
    integrate_steps(
        params,
        capacity_j,
        1.0,
        BatteryState::clamped(profile.initial_dod),
        settings,
        steps,
    )
    .cost
    .life_consumed()
}

fn settings(opts: &OracleOptions) -> IntegrationSettings {
    IntegrationSettings {
        dt_s: opts.dt_s,
        stop_on_violation: false,
        invert_energy_logic: opts.inject_sign_flip,
    }
}

fn relative_error(numeric: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        numeric.abs()
    } else {
        ((numeric - exact) / exact).abs()
    }
}

pub fn check_derivative(params: &DegradationParams) -> CheckResult {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for k in 0..=20 {
        let d = k as f64 * 0.05;
        let fd = (integrated_consumption(params, d + h) - integrated_consumption(params, d - h)) / (2.0 * h);
        let err = (instantaneous_rate(params, d) - fd).abs();
        if err > worst {
            worst = err;
            at = d;
        }
    }
    let tol = 1e-6;
    CheckResult {
        name: DERIVATIVE,
        passed: worst < tol,
        residual: Some(worst),
        tolerance: Some(tol),
        detail: format!("max |f(d) - g'(d)| = {worst:.3e} at d = {at}"),
    }
}

/// Relative tolerance for the profile check at step `dt`: 1e-4 at 1 s,
/// shrinking with the square of the step.
pub fn analytic_tolerance(dt: f64) -> f64 {
    1e-4 * dt * dt
}

pub fn check_profiles(params: &DegradationParams, opts: &OracleOptions) -> CheckResult {
    let settings = settings(opts);
    let mut rng = rng::stream(opts.seed, "oracle/profiles", 0);
    let mut worst: f64 = 0.0;
    let mut worst_idx = 0;
    for i in 0..opts.profiles {
        let profile = random_profile(&mut rng);
        let exact = profile_oracle(params, PROFILE_CAPACITY_J, &profile);
        let numeric = profile_numeric(params, PROFILE_CAPACITY_J, &profile, &settings);
        let err = relative_error(numeric, exact);
        if err > worst || err.is_nan() {
            worst = if err.is_nan() { f64::INFINITY } else { err };
            worst_idx = i;
        }
    }
    let tol = analytic_tolerance(opts.dt_s);
    CheckResult {
        name: ANALYTIC,
        passed: worst < tol,
        residual: Some(worst),
        tolerance: Some(tol),
        detail: format!(
            "{} profiles at dt = {} s, max relative error {worst:.3e} (profile {worst_idx})",
            opts.profiles, opts.dt_s
        ),
    }
}

/// Equal power and duration, once from DoD 0.1 and once from 0.8; the cost
/// ratio must match the antiderivative ratio.
pub fn check_path_dependence(params: &DegradationParams, opts: &OracleOptions) -> CheckResult {
    let duration = 1000u32;
    let deficit = 0.1 * PROFILE_CAPACITY_J / f64::from(duration);
    let run = |d0: f64| {
        let profile = Profile {
            initial_dod: d0,
            segments: vec![(duration, deficit)],
        };
        profile_numeric(params, PROFILE_CAPACITY_J, &profile, &settings(opts))
    };
    let low = run(0.1);
    let high = run(0.8);
    let g = |d| integrated_consumption(params, d);
    let expected = (g(0.9) - g(0.8)) / (g(0.2) - g(0.1));
    let ratio = high / low;
    let err = relative_error(ratio, expected);
    let tol = 1e-4;
    CheckResult {
        name: PATH_DEPENDENCE,
        passed: high > low && err < tol,
        residual: Some(err),
        tolerance: Some(tol),
        detail: format!("cost 0.8->0.9 = {high:.6e}, 0.1->0.2 = {low:.6e}, ratio {ratio:.6} vs {expected:.6}"),
    }
}

pub fn check_eclipse(opts: &OracleOptions) -> CheckResult {
    let orbit = OrbitParams::new(550_000.0, 0.0, 0.0, 0.0).expect("reference orbit");
    let sun = SunModel::default();
    let measured = eclipse_fraction(&orbit, &sun, opts.dt_s.min(1.0));
    let expected = (orbit.earth_radius_m / orbit.semi_major_axis()).asin() / std::f64::consts::PI;
    let err = (measured - expected).abs();
    let tol = 1e-3;
    CheckResult {
        name: ECLIPSE,
        passed: err < tol,
        residual: Some(err),
        tolerance: Some(tol),
        detail: format!("eclipse fraction {measured:.6} vs {expected:.6}"),
    }
}

/// Scenario used by the grid-dominance check: a 2-plane, 3-slot constellation
/// with otherwise default settings.
pub fn small_scenario_config(seed: u64, dt: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.constellation.planes = 2;
    cfg.constellation.sats_per_plane = 3;
    cfg.constellation.phasing = 1;
    cfg.simulation.master_seed = Some(seed);
    cfg.simulation.integration_dt_s = dt;
    cfg
}

/// Every heuristic's cost is at least the grid baseline's on every task, the
/// baseline finds a plan whenever any heuristic does, and every chosen plan
/// replays as deadline- and battery-safe.
pub fn check_grid_dominance(cfg: &ScenarioConfig, tasks: usize, grid: GridSpec) -> CheckResult {
    let fail = |detail: String| CheckResult {
        name: GRID_DOMINANCE,
        passed: false,
        residual: None,
        tolerance: None,
        detail,
    };
    let span = cfg.simulation.horizon_s + cfg.tasks.budget_s.hi();
    let scenario = match Scenario::build(cfg, span) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let fleet = scenario.fleet();
    let mut task_rng = rng::stream(cfg.seed(), rng::TASKS, 0);
    let tasks = generate_tasks(cfg, tasks, &mut task_rng);
    let mut scheduled = 0;
    let mut worst_gap = f64::INFINITY;
    for (i, task) in tasks.iter().enumerate() {
        let feasible = feasible_set(&fleet, task);
        let mut trial_rng = rng::stream(cfg.seed(), rng::RANDOM_SELECTION, i as u64);
        let base = schedule_from(
            HeuristicKind::GridBaseline,
            &fleet,
            task,
            &feasible,
            grid,
            &mut trial_rng,
        );
        if let Err(e) = verify_outcome(&fleet, task, &base) {
            return fail(format!("task {i}: {e}"));
        }
        for kind in HeuristicKind::SELECTORS {
            let out = schedule_from(kind, &fleet, task, &feasible, grid, &mut trial_rng);
            if let Err(e) = verify_outcome(&fleet, task, &out) {
                return fail(format!("task {i}: {e}"));
            }
            let Some(cost) = out.cost else { continue };
            scheduled += 1;
            let Some(base_cost) = base.cost else {
                return fail(format!("task {i}: {kind} found a plan but the grid baseline did not"));
            };
            if cost.life_consumed() < 0.0 {
                return fail(format!("task {i}: {kind} has negative cost"));
            }
            let gap = cost.life_consumed() - base_cost.life_consumed();
            if gap < 0.0 {
                return fail(format!(
                    "task {i}: {kind} cost {} below grid baseline {}",
                    cost.life_consumed(),
                    base_cost.life_consumed()
                ));
            }
            worst_gap = worst_gap.min(gap);
        }
    }
    CheckResult {
        name: GRID_DOMINANCE,
        passed: true,
        residual: None,
        tolerance: None,
        detail: format!(
            "{} satellites, {} tasks, {scheduled} heuristic placements, all at or above the grid baseline",
            scenario.constellation.len(),
            tasks.len()
        ),
    }
}

/// Runs every check. `cfg` supplies the wear parameters.
pub fn run_all(cfg: &ScenarioConfig, opts: &OracleOptions) -> OracleReport {
    let params = cfg.degradation;
    let small = ScenarioConfig {
        degradation: params,
        ..small_scenario_config(opts.seed, opts.dt_s)
    };
    OracleReport {
        checks: vec![
            check_derivative(&params),
            check_profiles(&params, opts),
            check_path_dependence(&params, opts),
            check_eclipse(opts),
            check_grid_dominance(&small, opts.tasks, GridSpec::default()),
        ],
    }
}
