//! Cycle-life law and path-dependent battery degradation.
//!
//! Degradation is expressed as the fraction of the baseline life (the cycle
//! life at 100% depth of discharge) consumed by a trajectory. With
//! `g(d) = d · 10^(σ(d-1))` the life consumed by a full discharge from 0 to
//! `d`, the instantaneous rate is `f(d) = g'(d)` and the cost of an arbitrary
//! trajectory is the integral of `f(d) · max(0, ḋ)` over time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orbit::SunModel;
use crate::power::{task_power, BatteryState, HarvestCurve, PowerError, SatelliteSpec};
use crate::sched::ExecutionPlan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DegradationError {
    #[error("depth of discharge must lie in (0, 1], got {0}")]
    InvalidDepth(f64),
    #[error("degradation constant sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("integration step must be positive, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Power(#[from] PowerError),
}

/// Battery-specific constants of the cycle-life law `log10(L) + σ d = ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationParams {
    pub sigma: f64,
    /// Only needed for absolute cycle counts; the cost path never reads it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl Default for DegradationParams {
    fn default() -> Self {
        Self {
            sigma: 0.8,
            epsilon: None,
        }
    }
}

impl DegradationParams {
    pub fn new(sigma: f64) -> Result<Self, DegradationError> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(Self { sigma, epsilon: None })
        } else {
            Err(DegradationError::InvalidSigma(sigma))
        }
    }
}

/// Fraction of baseline battery life consumed.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct DegradationCost(f64);

impl DegradationCost {
    pub const ZERO: DegradationCost = DegradationCost(0.0);

    pub fn new(life_consumed: f64) -> Self {
        debug_assert!(life_consumed >= 0.0);
        Self(life_consumed)
    }

    pub fn life_consumed(&self) -> f64 {
        self.0
    }
}

/// Cycle life at constant depth `d`: `10^(ε - σ d)`.
pub fn cycle_life(params: &DegradationParams, epsilon: f64, d: f64) -> Result<f64, DegradationError> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(DegradationError::InvalidDepth(d));
    }
    Ok(10f64.powf(epsilon - params.sigma * d))
}

/// Life consumed by a single discharge from 0 to `d`, in units of baseline life.
pub fn integrated_consumption(params: &DegradationParams, d: f64) -> f64 {
    d * 10f64.powf(params.sigma * (d - 1.0))
}

/// Marginal life consumed per unit of depth of discharge at depth `d`.
pub fn instantaneous_rate(params: &DegradationParams, d: f64) -> f64 {
    10f64.powf(params.sigma * (d - 1.0)) * (1.0 + params.sigma * std::f64::consts::LN_10 * d)
}

/// Knobs of the degradation integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    pub dt_s: f64,
    /// Abandon the trajectory at the first minimum-charge violation. The
    /// reported cost is then partial; only the feasibility flag is meaningful.
    pub stop_on_violation: bool,
    /// Mutation hook for the oracle self-test: inverts the sign of the DoD rate.
    #[doc(hidden)]
    pub invert_energy_logic: bool,
}

impl IntegrationSettings {
    pub fn new(dt_s: f64) -> Result<Self, DegradationError> {
        if dt_s > 0.0 && dt_s.is_finite() {
            Ok(Self {
                dt_s,
                stop_on_violation: false,
                invert_energy_logic: false,
            })
        } else {
            Err(DegradationError::InvalidStep(dt_s))
        }
    }
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            dt_s: 1.0,
            stop_on_violation: false,
            invert_energy_logic: false,
        }
    }
}

/// Outcome of integrating one power trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationReport {
    pub cost: DegradationCost,
    pub final_state: BatteryState,
    /// False if the depth of discharge exceeded the allowed maximum at any point.
    pub feasible: bool,
    /// Energy consumed minus energy harvested over the trajectory, joules.
    pub net_energy_j: f64,
    pub peak_dod: f64,
}

/// Integrates degradation along a sequence of `(step_length_s, net_deficit_w)` pairs.
///
/// Each step moves the battery by `deficit / capacity · h` (clamped to
/// `[0, 1]`); discharging steps add the trapezoidal integral of `f` between
/// the two depths. Charging and clamped steps cost nothing.
pub fn integrate_steps<I>(
    params: &DegradationParams,
    capacity_j: f64,
    max_dod: f64,
    initial: BatteryState,
    settings: &IntegrationSettings,
    steps: I,
) -> DegradationReport
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let sign = if settings.invert_energy_logic { -1.0 } else { 1.0 };
    let inv_capacity = sign / capacity_j;
    let mut dod = initial.dod();
    let mut rate_at_dod = instantaneous_rate(params, dod);
    let mut rate_fresh = true;
    let mut cost = 0.0;
    let mut net_energy = 0.0;
    let mut peak = dod;
    let mut feasible = dod <= max_dod;

    if !feasible && settings.stop_on_violation {
        return DegradationReport {
            cost: DegradationCost::ZERO,
            final_state: initial,
            feasible,
            net_energy_j: 0.0,
            peak_dod: peak,
        };
    }

    for (h, deficit_w) in steps {
        net_energy += deficit_w * h;
        let next = (dod + deficit_w * inv_capacity * h).clamp(0.0, 1.0);
        if next > dod {
            if !rate_fresh {
                rate_at_dod = instantaneous_rate(params, dod);
            }
            let rate_next = instantaneous_rate(params, next);
            cost += 0.5 * (rate_at_dod + rate_next) * (next - dod);
            rate_at_dod = rate_next;
            rate_fresh = true;
            if next > peak {
                peak = next;
            }
            if next > max_dod {
                feasible = false;
                if settings.stop_on_violation {
                    dod = next;
                    break;
                }
            }
        } else if next < dod {
            rate_fresh = false;
        }
        dod = next;
    }

    DegradationReport {
        cost: DegradationCost::new(cost),
        final_state: BatteryState::clamped(dod),
        feasible,
        net_energy_j: net_energy,
        peak_dod: peak,
    }
}

/// `(step_length_s, net_deficit_w)` pairs for a satellite drawing
/// `consumed_w` from `t0` for `duration_s`, sampled at step midpoints.
pub fn satellite_steps(
    spec: &SatelliteSpec,
    sun: &SunModel,
    consumed_w: f64,
    t0: f64,
    duration_s: f64,
    dt: f64,
) -> impl Iterator<Item = (f64, f64)> {
    let curve = HarvestCurve::new(spec, sun);
    let mut full = (duration_s / dt).floor() as usize;
    let mut rest = duration_s - full as f64 * dt;
    if rest < 0.0 {
        full -= 1;
        rest += dt;
    }
    let tail = (rest > 1e-9 * dt).then(|| {
        let t_mid = t0 + full as f64 * dt + 0.5 * rest;
        (rest, consumed_w - curve.at(t_mid))
    });
    curve
        .samples(t0 + 0.5 * dt, dt)
        .take(full)
        .map(move |harvest| (dt, consumed_w - harvest))
        .chain(tail)
}

/// Degradation incurred by executing `plan` on the satellite described by `spec`,
/// starting from battery state `initial`.
pub fn task_degradation(
    spec: &SatelliteSpec,
    params: &DegradationParams,
    plan: &ExecutionPlan,
    initial: BatteryState,
    sun: &SunModel,
    settings: &IntegrationSettings,
) -> Result<DegradationReport, DegradationError> {
    let consumed = task_power(spec, plan.freq_hz)? + spec.operational_power_w;
    let steps = satellite_steps(spec, sun, consumed, plan.start_s, plan.duration_s, settings.dt_s);
    Ok(integrate_steps(
        params,
        spec.capacity_j(),
        spec.max_dod(),
        initial,
        settings,
        steps,
    ))
}
