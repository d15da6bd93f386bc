//! Scenario configuration.
//!
//! The on-disk format is TOML with one table per concern. Every key has a
//! default, so an empty file describes the reference 12 × 25 constellation
//! at 550 km and 53° with the standard satellite and task distributions.
//!
//! ```toml
//! [constellation]
//! planes = 12
//! sats_per_plane = 25
//! phasing = 1
//! altitude_km = 550.0
//! inclination_deg = 53.0
//! sun_direction = [1.0, 0.0, 0.0]
//!
//! [satellite]
//! panel_efficiency = [0.05, 0.15]
//!
//! [degradation]
//! sigma = 0.8
//!
//! [simulation]
//! integration_dt_s = 1.0
//! master_seed = 42
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degradation::DegradationParams;
use crate::orbit::{EciVector, OrbitError, SunModel, WalkerConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

/// Closed interval `[lo, hi]` for a uniform distribution, written `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRange(pub f64, pub f64);

impl UniformRange {
    pub fn lo(&self) -> f64 {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.1
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.0 + self.1)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.0..=self.1).contains(&x)
    }

    /// Requires finite bounds with `lo < hi`, both inside `[min, max]`.
    pub fn check(&self, key: &str, min: f64, max: f64) -> Result<(), ConfigError> {
        if !(self.0.is_finite() && self.1.is_finite()) {
            return Err(ConfigError::invalid(key, "bounds must be finite"));
        }
        if self.0 >= self.1 {
            return Err(ConfigError::invalid(
                key,
                format!("lower bound {} must be below upper bound {}", self.0, self.1),
            ));
        }
        if self.0 < min || self.1 > max {
            return Err(ConfigError::invalid(
                key,
                format!("range [{}, {}] must lie within [{min}, {max}]", self.0, self.1),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstellationSection {
    pub planes: u32,
    pub sats_per_plane: u32,
    pub phasing: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub sun_direction: [f64; 3],
}

impl Default for ConstellationSection {
    fn default() -> Self {
        Self {
            planes: 12,
            sats_per_plane: 25,
            phasing: 1,
            altitude_km: 550.0,
            inclination_deg: 53.0,
            sun_direction: [1.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SatelliteSection {
    pub panel_area_m2: UniformRange,
    pub panel_efficiency: UniformRange,
    pub operational_power_w: UniformRange,
    pub initial_soc: UniformRange,
    pub battery_capacity_wh: f64,
    pub min_soc: f64,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub cpu_coeff: f64,
}

impl Default for SatelliteSection {
    fn default() -> Self {
        Self {
            panel_area_m2: UniformRange(3.0, 15.0),
            panel_efficiency: UniformRange(0.05, 0.15),
            operational_power_w: UniformRange(50.0, 100.0),
            initial_soc: UniformRange(0.20, 0.95),
            battery_capacity_wh: 1200.0,
            min_soc: 0.20,
            f_min_hz: 1e9,
            f_max_hz: 4e9,
            cpu_coeff: 1e-26,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub workload_cycles: UniformRange,
    pub budget_s: UniformRange,
    pub count: usize,
}

impl Default for TaskSection {
    fn default() -> Self {
        Self {
            workload_cycles: UniformRange(1e11, 1e12),
            budget_s: UniformRange(25.0, 1000.0),
            count: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub horizon_s: f64,
    pub integration_dt_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub trials_per_point: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            horizon_s: 5400.0,
            integration_dt_s: 1.0,
            master_seed: None,
            trials_per_point: 1000,
        }
    }
}

/// Complete description of a simulated scenario.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub constellation: ConstellationSection,
    pub satellite: SatelliteSection,
    pub degradation: DegradationParams,
    pub tasks: TaskSection,
    pub simulation: SimulationSection,
}

/// Seed used when neither the config nor the caller provides one.
pub const DEFAULT_SEED: u64 = 42;

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes to TOML")
    }

    pub fn seed(&self) -> u64 {
        self.simulation.master_seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn walker(&self) -> WalkerConfig {
        WalkerConfig {
            planes: self.constellation.planes,
            sats_per_plane: self.constellation.sats_per_plane,
            phasing: self.constellation.phasing,
            altitude_m: self.constellation.altitude_km * 1e3,
            inclination_rad: self.constellation.inclination_deg.to_radians(),
        }
    }

    pub fn sun(&self) -> Result<SunModel, ConfigError> {
        let [x, y, z] = self.constellation.sun_direction;
        SunModel::new(EciVector::new(x, y, z))
            .map_err(|e| ConfigError::invalid("constellation.sun_direction", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.constellation;
        self.walker().validate().map_err(|e| match e {
            OrbitError::InvalidPhasing { .. } => ConfigError::invalid("constellation.phasing", e.to_string()),
            _ => ConfigError::invalid("constellation.planes", e.to_string()),
        })?;
        if !(c.altitude_km > 0.0 && c.altitude_km.is_finite()) {
            return Err(ConfigError::invalid("constellation.altitude_km", "must be positive"));
        }
        if !(0.0..=180.0).contains(&c.inclination_deg) {
            return Err(ConfigError::invalid(
                "constellation.inclination_deg",
                "must lie in [0, 180]",
            ));
        }
        self.sun()?;

        let s = &self.satellite;
        s.panel_area_m2
            .check("satellite.panel_area_m2", f64::MIN_POSITIVE, f64::INFINITY)?;
        s.panel_efficiency
            .check("satellite.panel_efficiency", f64::MIN_POSITIVE, 1.0 - f64::EPSILON)?;
        s.operational_power_w
            .check("satellite.operational_power_w", f64::MIN_POSITIVE, f64::INFINITY)?;
        s.initial_soc.check("satellite.initial_soc", 0.0, 1.0)?;
        positive("satellite.battery_capacity_wh", s.battery_capacity_wh)?;
        positive("satellite.cpu_coeff", s.cpu_coeff)?;
        positive("satellite.f_min_hz", s.f_min_hz)?;
        positive("satellite.f_max_hz", s.f_max_hz)?;
        if s.f_min_hz > s.f_max_hz {
            return Err(ConfigError::invalid("satellite.f_min_hz", "must not exceed f_max_hz"));
        }
        if !(s.min_soc > 0.0 && s.min_soc < 1.0) {
            return Err(ConfigError::invalid("satellite.min_soc", "must lie in (0, 1)"));
        }

        positive("degradation.sigma", self.degradation.sigma)?;

        let t = &self.tasks;
        t.workload_cycles
            .check("tasks.workload_cycles", f64::MIN_POSITIVE, f64::INFINITY)?;
        t.budget_s.check("tasks.budget_s", f64::MIN_POSITIVE, f64::INFINITY)?;
        if t.count == 0 {
            return Err(ConfigError::invalid("tasks.count", "must be positive"));
        }

        let sim = &self.simulation;
        positive("simulation.horizon_s", sim.horizon_s)?;
        positive("simulation.integration_dt_s", sim.integration_dt_s)?;
        if sim.trials_per_point == 0 {
            return Err(ConfigError::invalid("simulation.trials_per_point", "must be positive"));
        }
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be strictly positive, got {v}")))
    }
}
