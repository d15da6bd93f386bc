//! Solar harvesting, processor power and battery state-of-charge evolution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orbit::{cosine_factor, eclipse_indicator, OrbitParams, SunModel, SunProjection};

/// Solar constant in W/m².
pub const SOLAR_CONSTANT_W_M2: f64 = 1361.0;

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("frequency {freq_hz} Hz outside hardware range [{min_hz}, {max_hz}]")]
    FrequencyOutOfRange { freq_hz: f64, min_hz: f64, max_hz: f64 },
    #[error("invalid satellite parameter `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error("depth of discharge {0} outside [0, 1]")]
    InvalidDod(f64),
}

/// Static physical parameters of one satellite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteSpec {
    pub panel_area_m2: f64,
    pub panel_efficiency: f64,
    pub operational_power_w: f64,
    pub battery_capacity_wh: f64,
    /// Minimum state of charge as a fraction of capacity.
    pub min_soc: f64,
    /// Processor constant `c` in W/Hz³.
    pub cpu_coeff: f64,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub orbit: OrbitParams,
}

impl SatelliteSpec {
    pub fn validate(&self) -> Result<(), PowerError> {
        fn positive(field: &'static str, v: f64) -> Result<(), PowerError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PowerError::InvalidSpec {
                    field,
                    reason: format!("must be strictly positive, got {v}"),
                })
            }
        }
        positive("panel_area_m2", self.panel_area_m2)?;
        positive("operational_power_w", self.operational_power_w)?;
        positive("battery_capacity_wh", self.battery_capacity_wh)?;
        positive("cpu_coeff", self.cpu_coeff)?;
        positive("f_min_hz", self.f_min_hz)?;
        positive("f_max_hz", self.f_max_hz)?;
        if !(self.panel_efficiency > 0.0 && self.panel_efficiency < 1.0) {
            return Err(PowerError::InvalidSpec {
                field: "panel_efficiency",
                reason: format!("must lie in (0, 1), got {}", self.panel_efficiency),
            });
        }
        if !(self.min_soc > 0.0 && self.min_soc < 1.0) {
            return Err(PowerError::InvalidSpec {
                field: "min_soc",
                reason: format!("must lie in (0, 1), got {}", self.min_soc),
            });
        }
        if self.f_min_hz > self.f_max_hz {
            return Err(PowerError::InvalidSpec {
                field: "f_min_hz",
                reason: format!("{} exceeds f_max_hz {}", self.f_min_hz, self.f_max_hz),
            });
        }
        Ok(())
    }

    /// Battery capacity in joules.
    pub fn capacity_j(&self) -> f64 {
        self.battery_capacity_wh * SECONDS_PER_HOUR
    }

    /// Largest depth of discharge that still respects the minimum state of charge.
    pub fn max_dod(&self) -> f64 {
        1.0 - self.min_soc
    }

    /// Peak harvested power (sunlit, panel facing the Sun).
    pub fn peak_harvest_w(&self) -> f64 {
        SOLAR_CONSTANT_W_M2 * self.panel_area_m2 * self.panel_efficiency
    }
}

/// Battery depth of discharge; state of charge is `1 - dod`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BatteryState {
    dod: f64,
}

impl BatteryState {
    pub fn new(dod: f64) -> Result<Self, PowerError> {
        if (0.0..=1.0).contains(&dod) {
            Ok(Self { dod })
        } else {
            Err(PowerError::InvalidDod(dod))
        }
    }

    pub fn from_soc(soc: f64) -> Result<Self, PowerError> {
        Self::new(1.0 - soc)
    }

    pub fn full() -> Self {
        Self { dod: 0.0 }
    }

    pub fn dod(&self) -> f64 {
        self.dod
    }

    pub fn soc(&self) -> f64 {
        1.0 - self.dod
    }

    pub(crate) fn clamped(dod: f64) -> Self {
        Self {
            dod: dod.clamp(0.0, 1.0),
        }
    }
}

/// Instantaneous power balance of a satellite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSample {
    pub harvested_w: f64,
    pub consumed_w: f64,
}

impl PowerSample {
    pub fn net_deficit_w(&self) -> f64 {
        self.consumed_w - self.harvested_w
    }
}

/// Harvested solar power at time `t`.
pub fn harvested_power(spec: &SatelliteSpec, t: f64, sun: &SunModel) -> f64 {
    let pos = spec.orbit.propagate(t);
    let lit = f64::from(eclipse_indicator(&pos, sun, spec.orbit.earth_radius_m));
    lit * spec.peak_harvest_w() * cosine_factor(&pos, sun, spec.orbit.semi_major_axis())
}

/// Dynamic processor power `c f³`. A frequency of zero means idle.
pub fn task_power(spec: &SatelliteSpec, freq_hz: f64) -> Result<f64, PowerError> {
    if freq_hz == 0.0 {
        return Ok(0.0);
    }
    if !(spec.f_min_hz..=spec.f_max_hz).contains(&freq_hz) {
        return Err(PowerError::FrequencyOutOfRange {
            freq_hz,
            min_hz: spec.f_min_hz,
            max_hz: spec.f_max_hz,
        });
    }
    Ok(spec.cpu_coeff * freq_hz.powi(3))
}

/// Rate of change of depth of discharge, 1/s. Negative while charging.
pub fn dod_rate(spec: &SatelliteSpec, sample: &PowerSample) -> f64 {
    sample.net_deficit_w() / spec.capacity_j()
}

/// Explicit step of the battery, saturating at full (0) and empty (1).
pub fn step_battery(state: BatteryState, rate: f64, dt: f64) -> BatteryState {
    BatteryState::clamped(state.dod + rate * dt)
}

/// Harvested power along a trajectory for one satellite.
///
/// Wraps the per-orbit [`SunProjection`] so that evenly spaced samples are
/// produced by rotating the orbital phase rather than re-evaluating
/// trigonometric functions.
#[derive(Debug, Clone, Copy)]
pub struct HarvestCurve {
    projection: SunProjection,
    peak_w: f64,
}

impl HarvestCurve {
    pub fn new(spec: &SatelliteSpec, sun: &SunModel) -> Self {
        Self {
            projection: SunProjection::new(&spec.orbit, sun),
            peak_w: spec.peak_harvest_w(),
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        let (c, s) = self.projection.phase_at(t);
        self.peak_w * self.projection.illumination(c, s)
    }

    /// Samples at `t0, t0 + dt, t0 + 2 dt, ...`.
    pub fn samples(&self, t0: f64, dt: f64) -> HarvestSamples {
        let (cos_u, sin_u) = self.projection.phase_at(t0);
        let (sin_d, cos_d) = (self.projection.mean_motion() * dt).sin_cos();
        HarvestSamples {
            curve: *self,
            cos_u,
            sin_u,
            cos_d,
            sin_d,
        }
    }
}

/// Iterator over evenly spaced harvest samples; see [`HarvestCurve::samples`].
#[derive(Debug, Clone)]
pub struct HarvestSamples {
    curve: HarvestCurve,
    cos_u: f64,
    sin_u: f64,
    cos_d: f64,
    sin_d: f64,
}

impl Iterator for HarvestSamples {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let value = self.curve.peak_w * self.curve.projection.illumination(self.cos_u, self.sin_u);
        let c = self.cos_u * self.cos_d - self.sin_u * self.sin_d;
        let s = self.sin_u * self.cos_d + self.cos_u * self.sin_d;
        self.cos_u = c;
        self.sin_u = s;
        Some(value)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::orbit::{walker_init, EciVector, WalkerConfig};
    use approx::assert_relative_eq;

    pub(crate) fn table1_spec() -> SatelliteSpec {
        SatelliteSpec {
            panel_area_m2: 10.0,
            panel_efficiency: 0.1,
            operational_power_w: 75.0,
            battery_capacity_wh: 1200.0,
            min_soc: 0.2,
            cpu_coeff: 1e-26,
            f_min_hz: 1e9,
            f_max_hz: 4e9,
            orbit: OrbitParams::new(550_000.0, 0.0, 0.0, 0.0).unwrap(),
        }
    }

    #[test]
    fn harvest_at_subsolar_point() {
        let spec = table1_spec();
        assert_relative_eq!(
            harvested_power(&spec, 0.0, &SunModel::default()),
            1361.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn harvest_zero_in_eclipse_and_at_terminator() {
        let spec = table1_spec();
        let half = spec.orbit.period_s() / 2.0;
        assert_eq!(harvested_power(&spec, half, &SunModel::default()), 0.0);
        // sun along +Y: the satellite at u = 0 sits on the terminator
        let sun = SunModel::new(EciVector::new(0.0, 1.0, 0.0)).unwrap();
        assert!(harvested_power(&spec, 0.0, &sun).abs() < 1e-9);
    }

    #[test]
    fn task_power_cubic() {
        let spec = table1_spec();
        assert_relative_eq!(task_power(&spec, 1e9).unwrap(), 10.0, max_relative = 1e-12);
        assert_relative_eq!(task_power(&spec, 4e9).unwrap(), 640.0, max_relative = 1e-12);
        assert_eq!(task_power(&spec, 0.0).unwrap(), 0.0);
        assert!(matches!(
            task_power(&spec, 5e9),
            Err(PowerError::FrequencyOutOfRange { .. })
        ));
        assert!(task_power(&spec, 0.5e9).is_err());
    }

    #[test]
    fn dod_rate_examples() {
        let spec = table1_spec();
        let drain = PowerSample {
            harvested_w: 0.0,
            consumed_w: 700.0,
        };
        assert_relative_eq!(
            dod_rate(&spec, &drain),
            1.620_370_370_370_370_4e-4,
            max_relative = 1e-12
        );
        let balanced = PowerSample {
            harvested_w: 300.0,
            consumed_w: 300.0,
        };
        assert_eq!(dod_rate(&spec, &balanced), 0.0);
        let charge = PowerSample {
            harvested_w: 1361.0,
            consumed_w: 100.0,
        };
        assert_relative_eq!(
            dod_rate(&spec, &charge),
            -2.918_981_481_481_481_5e-4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn step_battery_examples() {
        let s = step_battery(BatteryState::new(0.5).unwrap(), 1.62037e-4, 1000.0);
        assert_relative_eq!(s.dod(), 0.662_037, epsilon = 1e-12);
        let s = step_battery(BatteryState::new(0.01).unwrap(), -2.9190e-4, 1000.0);
        assert_eq!(s.dod(), 0.0);
        let s0 = BatteryState::new(0.37).unwrap();
        assert_eq!(step_battery(s0, 0.0, 12.0), s0);
    }

    #[test]
    fn battery_state_bounds() {
        assert!(BatteryState::new(-0.1).is_err());
        assert!(BatteryState::new(1.1).is_err());
        assert_relative_eq!(BatteryState::from_soc(0.95).unwrap().dod(), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn spec_validation_names_field() {
        let mut spec = table1_spec();
        spec.panel_efficiency = 1.5;
        match spec.validate() {
            Err(PowerError::InvalidSpec { field, .. }) => assert_eq!(field, "panel_efficiency"),
            other => panic!("unexpected {other:?}"),
        }
        let mut spec = table1_spec();
        spec.f_min_hz = 5e9;
        assert!(spec.validate().is_err());
        assert!(table1_spec().validate().is_ok());
    }

    #[test]
    fn harvest_curve_matches_direct_evaluation() {
        let walker = WalkerConfig {
            planes: 4,
            sats_per_plane: 3,
            phasing: 1,
            altitude_m: 550_000.0,
            inclination_rad: 53f64.to_radians(),
        };
        let sun = SunModel::new(EciVector::new(0.6, 0.64, 0.48)).unwrap();
        for orbit in walker_init(&walker).unwrap() {
            let spec = SatelliteSpec { orbit, ..table1_spec() };
            let curve = HarvestCurve::new(&spec, &sun);
            let t0 = 123.25;
            for (k, p) in curve.samples(t0, 0.5).take(20_000).enumerate() {
                let t = t0 + k as f64 * 0.5;
                let direct = harvested_power(&spec, t, &sun);
                assert!((p - direct).abs() < 1e-8, "k={k}: {p} vs {direct}");
                assert!((curve.at(t) - direct).abs() < 1e-9);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn harvest_non_negative_and_dark_in_shadow(t in 0.0..20_000.0f64, inc in 0.0..std::f64::consts::PI, raan in 0.0..std::f64::consts::TAU) {
                let mut spec = table1_spec();
                spec.orbit = OrbitParams::new(550_000.0, inc, raan, 0.0).unwrap();
                let sun = SunModel::default();
                let p = harvested_power(&spec, t, &sun);
                prop_assert!(p >= 0.0);
                let pos = spec.orbit.propagate(t);
                if eclipse_indicator(&pos, &sun, spec.orbit.earth_radius_m) == 0 {
                    prop_assert_eq!(p, 0.0);
                }
            }

            #[test]
            fn task_power_increasing_and_convex(a in 1e9..4e9f64, b in 1e9..4e9f64) {
                let spec = table1_spec();
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assume!(hi - lo > 1.0);
                let plo = task_power(&spec, lo).unwrap();
                let phi = task_power(&spec, hi).unwrap();
                prop_assert!(phi > plo);
                let mid = task_power(&spec, 0.5 * (lo + hi)).unwrap();
                prop_assert!(mid <= 0.5 * (plo + phi));
            }

            #[test]
            fn step_preserves_unit_interval(d in 0.0..=1.0f64, rate in -1.0..1.0f64, dt in 1e-3..1e4f64) {
                let s = step_battery(BatteryState::new(d).unwrap(), rate, dt);
                prop_assert!((0.0..=1.0).contains(&s.dod()));
            }

            #[test]
            fn discharge_iff_deficit(h in 0.0..3000.0f64, c in 0.0..3000.0f64) {
                let spec = table1_spec();
                let rate = dod_rate(&spec, &PowerSample { harvested_w: h, consumed_w: c });
                prop_assert_eq!(rate > 0.0, c > h);
            }
        }
    }
}
