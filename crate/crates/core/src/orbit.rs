//! Circular-orbit propagation for Walker Delta constellations.
//!
//! Positions are expressed in the Earth-Centered Inertial frame. The Earth
//! shadow is a cylinder of radius `R_E` aligned with the Sun-Earth line and
//! the Sun direction is fixed over the simulation horizon.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Earth gravitational parameter in m³/s².
pub const EARTH_MU_M3S2: f64 = 3.986_004_418e14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("phasing F = {phasing} must be smaller than the number of planes P = {planes}")]
    InvalidPhasing { phasing: u32, planes: u32 },
    #[error("constellation must contain at least one satellite (P = {planes}, S = {sats_per_plane})")]
    Empty { planes: u32, sats_per_plane: u32 },
    #[error("altitude must be positive, got {0} m")]
    InvalidAltitude(f64),
    #[error("inclination must lie in [0, pi], got {0} rad")]
    InvalidInclination(f64),
    #[error("sun direction must be a finite non-zero vector")]
    DegenerateSunDirection,
}

/// Position (or direction) in the ECI frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EciVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EciVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &EciVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, k: f64) -> EciVector {
        EciVector::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Fixed unit vector pointing from the Earth towards the Sun.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunModel {
    direction: EciVector,
}

impl SunModel {
    /// Normalizes `direction`; rejects zero or non-finite input.
    pub fn new(direction: EciVector) -> Result<Self, OrbitError> {
        let norm = direction.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(OrbitError::DegenerateSunDirection);
        }
        Ok(Self {
            direction: direction.scale(1.0 / norm),
        })
    }

    pub fn direction(&self) -> EciVector {
        self.direction
    }
}

impl Default for SunModel {
    fn default() -> Self {
        Self {
            direction: EciVector::new(1.0, 0.0, 0.0),
        }
    }
}

/// Orbital elements of one satellite on a circular orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    pub altitude_m: f64,
    pub inclination_rad: f64,
    pub raan_rad: f64,
    pub arg_latitude0_rad: f64,
    pub earth_radius_m: f64,
    pub mu_m3s2: f64,
}

impl OrbitParams {
    /// Builds a parameter set with the default Earth constants. RAAN and
    /// initial argument of latitude are normalized to `[0, 2π)`.
    pub fn new(
        altitude_m: f64,
        inclination_rad: f64,
        raan_rad: f64,
        arg_latitude0_rad: f64,
    ) -> Result<Self, OrbitError> {
        if altitude_m.is_nan() || altitude_m <= 0.0 {
            return Err(OrbitError::InvalidAltitude(altitude_m));
        }
        if !(0.0..=PI).contains(&inclination_rad) {
            return Err(OrbitError::InvalidInclination(inclination_rad));
        }
        Ok(Self {
            altitude_m,
            inclination_rad,
            raan_rad: normalize_angle(raan_rad),
            arg_latitude0_rad: normalize_angle(arg_latitude0_rad),
            earth_radius_m: EARTH_RADIUS_M,
            mu_m3s2: EARTH_MU_M3S2,
        })
    }

    /// Semi-major axis `R_E + h`.
    pub fn semi_major_axis(&self) -> f64 {
        self.earth_radius_m + self.altitude_m
    }

    /// Mean motion in rad/s.
    pub fn mean_motion(&self) -> f64 {
        let a = self.semi_major_axis();
        (self.mu_m3s2 / (a * a * a)).sqrt()
    }

    pub fn period_s(&self) -> f64 {
        TAU / self.mean_motion()
    }

    /// Argument of latitude at time `t`, not wrapped.
    pub fn arg_latitude(&self, t: f64) -> f64 {
        self.arg_latitude0_rad + self.mean_motion() * t
    }

    /// ECI position at time `t` seconds.
    pub fn propagate(&self, t: f64) -> EciVector {
        let (sin_u, cos_u) = self.arg_latitude(t).sin_cos();
        self.position_from_phase(cos_u, sin_u)
    }

    fn position_from_phase(&self, cos_u: f64, sin_u: f64) -> EciVector {
        let a = self.semi_major_axis();
        let (sin_o, cos_o) = self.raan_rad.sin_cos();
        let (sin_i, cos_i) = self.inclination_rad.sin_cos();
        EciVector::new(
            a * (cos_o * cos_u - sin_o * sin_u * cos_i),
            a * (sin_o * cos_u + cos_o * sin_u * cos_i),
            a * (sin_u * sin_i),
        )
    }
}

/// Walker Delta constellation parameters (`P` planes, `S` slots, phasing `F`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkerConfig {
    pub planes: u32,
    pub sats_per_plane: u32,
    pub phasing: u32,
    pub altitude_m: f64,
    pub inclination_rad: f64,
}

impl WalkerConfig {
    pub fn total(&self) -> usize {
        self.planes as usize * self.sats_per_plane as usize
    }

    pub fn validate(&self) -> Result<(), OrbitError> {
        if self.total() == 0 {
            return Err(OrbitError::Empty {
                planes: self.planes,
                sats_per_plane: self.sats_per_plane,
            });
        }
        if self.phasing >= self.planes {
            return Err(OrbitError::InvalidPhasing {
                phasing: self.phasing,
                planes: self.planes,
            });
        }
        Ok(())
    }
}

/// Expands a Walker Delta configuration into per-satellite orbital elements,
/// row-major in `(plane, slot)` order.
pub fn walker_init(cfg: &WalkerConfig) -> Result<Vec<OrbitParams>, OrbitError> {
    cfg.validate()?;
    let planes = f64::from(cfg.planes);
    let slots = f64::from(cfg.sats_per_plane);
    let total = cfg.total() as f64;
    let mut out = Vec::with_capacity(cfg.total());
    for plane in 0..cfg.planes {
        let raan = f64::from(plane) * TAU / planes;
        for slot in 0..cfg.sats_per_plane {
            let u0 = (f64::from(slot) / slots + f64::from(plane) * f64::from(cfg.phasing) / total) * TAU;
            out.push(OrbitParams::new(cfg.altitude_m, cfg.inclination_rad, raan, u0)?);
        }
    }
    Ok(out)
}

/// Returns 0 when `pos` lies inside the cylindrical Earth shadow, 1 otherwise.
pub fn eclipse_indicator(pos: &EciVector, sun: &SunModel, earth_radius_m: f64) -> u8 {
    let along = pos.dot(&sun.direction);
    let perp_sq = pos.norm_squared() - along * along;
    if along < 0.0 && perp_sq < earth_radius_m * earth_radius_m {
        0
    } else {
        1
    }
}

/// Cosine loss for a radially pointing panel, clipped at zero.
pub fn cosine_factor(pos: &EciVector, sun: &SunModel, semi_major_axis_m: f64) -> f64 {
    (pos.dot(&sun.direction) / semi_major_axis_m).max(0.0)
}

/// Fraction of one orbital period spent in shadow, sampled every `dt_s` seconds.
pub fn eclipse_fraction(params: &OrbitParams, sun: &SunModel, dt_s: f64) -> f64 {
    let period = params.period_s();
    let steps = (period / dt_s).round().max(1.0) as usize;
    let step = period / steps as f64;
    let dark = (0..steps)
        .filter(|&k| {
            let pos = params.propagate(k as f64 * step);
            eclipse_indicator(&pos, sun, params.earth_radius_m) == 0
        })
        .count();
    dark as f64 / steps as f64
}

/// Sun geometry of one orbit reduced to the in-plane phase.
///
/// With `r = a (cos u · p + sin u · q)` for orthonormal in-plane axes `p`, `q`,
/// the Sun projection is `a (α cos u + β sin u)`. This lets harvesting be
/// evaluated along a trajectory by rotating `(cos u, sin u)` instead of
/// recomputing trigonometric functions at every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunProjection {
    alpha: f64,
    beta: f64,
    arg_latitude0: f64,
    mean_motion: f64,
}

impl SunProjection {
    pub fn new(params: &OrbitParams, sun: &SunModel) -> Self {
        let s = sun.direction;
        let (sin_o, cos_o) = params.raan_rad.sin_cos();
        let (sin_i, cos_i) = params.inclination_rad.sin_cos();
        Self {
            alpha: s.x * cos_o + s.y * sin_o,
            beta: cos_i * (s.y * cos_o - s.x * sin_o) + s.z * sin_i,
            arg_latitude0: params.arg_latitude0_rad,
            mean_motion: params.mean_motion(),
        }
    }

    pub fn mean_motion(&self) -> f64 {
        self.mean_motion
    }

    /// `(cos u, sin u)` at time `t`.
    pub fn phase_at(&self, t: f64) -> (f64, f64) {
        let (s, c) = (self.arg_latitude0 + self.mean_motion * t).sin_cos();
        (c, s)
    }

    /// Effective illumination `I · cos θ` for the given phase. On the night
    /// side the cosine factor is already zero, so the shadow test is implied.
    pub fn illumination(&self, cos_u: f64, sin_u: f64) -> f64 {
        (self.alpha * cos_u + self.beta * sin_u).max(0.0)
    }
}

fn normalize_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn leo(inclination: f64, raan: f64, u0: f64) -> OrbitParams {
        OrbitParams::new(550_000.0, inclination, raan, u0).unwrap()
    }

    fn reference_walker() -> WalkerConfig {
        WalkerConfig {
            planes: 12,
            sats_per_plane: 25,
            phasing: 1,
            altitude_m: 550_000.0,
            inclination_rad: 53f64.to_radians(),
        }
    }

    #[test]
    fn walker_raan_and_phasing() {
        let sats = walker_init(&reference_walker()).unwrap();
        assert_eq!(sats.len(), 300);
        // plane 1, slot 0 is index 25 in row-major order
        assert_relative_eq!(sats[25].raan_rad, std::f64::consts::FRAC_PI_6, epsilon = 1e-12);
        assert_relative_eq!(sats[25].arg_latitude0_rad, 0.020_943_951_023_931_95, epsilon = 1e-12);
        assert_eq!(sats[0].raan_rad, 0.0);
        assert_eq!(sats[0].arg_latitude0_rad, 0.0);
        assert!(sats.iter().all(|s| s.altitude_m == 550_000.0));
    }

    #[test]
    fn walker_rejects_bad_phasing() {
        let mut cfg = reference_walker();
        cfg.phasing = 12;
        assert_eq!(
            walker_init(&cfg),
            Err(OrbitError::InvalidPhasing {
                phasing: 12,
                planes: 12
            })
        );
        cfg.phasing = 0;
        cfg.planes = 0;
        assert!(matches!(walker_init(&cfg), Err(OrbitError::Empty { .. })));
    }

    #[test]
    fn walker_zero_phasing_aligns_slots() {
        let mut cfg = reference_walker();
        cfg.phasing = 0;
        let sats = walker_init(&cfg).unwrap();
        for slot in 0..25 {
            let u0 = sats[slot].arg_latitude0_rad;
            for plane in 1..12 {
                assert_eq!(sats[plane * 25 + slot].arg_latitude0_rad, u0);
            }
        }
    }

    #[test]
    fn propagate_reference_points() {
        let eq = leo(0.0, 0.0, 0.0);
        let p = eq.propagate(0.0);
        assert_eq!(p, EciVector::new(6_921_000.0, 0.0, 0.0));

        // mean motion from sqrt(mu / a^3), evaluated with 30-digit arithmetic
        assert_relative_eq!(eq.mean_motion(), 1.096_517_618_060_230_8e-3, max_relative = 1e-12);
        assert_relative_eq!(eq.period_s(), 5_730.127_089_334_607, max_relative = 1e-12);

        let polar = leo(FRAC_PI_2, 0.0, 0.0);
        let quarter = FRAC_PI_2 / polar.mean_motion();
        let p = polar.propagate(quarter);
        let a = polar.semi_major_axis();
        assert!(p.x.abs() < 1e-6 && p.y.abs() < 1e-6);
        assert_relative_eq!(p.z, a, max_relative = 1e-12);
    }

    #[test]
    fn eclipse_indicator_cases() {
        let sun = SunModel::default();
        let a = 6_921_000.0;
        assert_eq!(eclipse_indicator(&EciVector::new(a, 0.0, 0.0), &sun, EARTH_RADIUS_M), 1);
        assert_eq!(
            eclipse_indicator(&EciVector::new(-a, 0.0, 0.0), &sun, EARTH_RADIUS_M),
            0
        );
        assert_eq!(eclipse_indicator(&EciVector::new(0.0, a, 0.0), &sun, EARTH_RADIUS_M), 1);
    }

    #[test]
    fn cosine_factor_cases() {
        let sun = SunModel::default();
        let a = 6_921_000.0;
        assert_eq!(cosine_factor(&EciVector::new(a, 0.0, 0.0), &sun, a), 1.0);
        assert_eq!(cosine_factor(&EciVector::new(0.0, a, 0.0), &sun, a), 0.0);
        let diag = EciVector::new(a * 45f64.to_radians().cos(), a * 45f64.to_radians().sin(), 0.0);
        assert_relative_eq!(cosine_factor(&diag, &sun, a), 0.707_106_781_186_547_5, epsilon = 1e-12);
    }

    #[test]
    fn sun_model_normalizes() {
        let sun = SunModel::new(EciVector::new(3.0, 0.0, 4.0)).unwrap();
        assert!((sun.direction().norm() - 1.0).abs() < 1e-12);
        assert_eq!(
            SunModel::new(EciVector::default()),
            Err(OrbitError::DegenerateSunDirection)
        );
    }

    #[test]
    fn equatorial_eclipse_fraction_matches_arc() {
        let orbit = leo(0.0, 0.0, 0.0);
        let frac = eclipse_fraction(&orbit, &SunModel::default(), 1.0);
        let expected = (EARTH_RADIUS_M / orbit.semi_major_axis()).asin() / PI;
        assert_relative_eq!(expected, 0.372_244_106_864_483_55, epsilon = 1e-12);
        assert!((frac - expected).abs() < 1e-3, "{frac} vs {expected}");
    }

    #[test]
    fn eclipse_fraction_vanishes_without_shadow() {
        let mut orbit = leo(0.0, 0.0, 0.0);
        orbit.earth_radius_m = 0.0;
        orbit.altitude_m = 6_921_000.0;
        assert_eq!(eclipse_fraction(&orbit, &SunModel::default(), 1.0), 0.0);
    }

    #[test]
    fn polar_orbit_eclipse_fraction_matches_fine_sampling() {
        // sun normal to the orbital plane: the orbit never enters the shadow
        let orbit = leo(FRAC_PI_2, 0.0, 0.0);
        let sun = SunModel::new(EciVector::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(eclipse_fraction(&orbit, &sun, 1.0), 0.0);

        // oblique sun: compare against brute-force sampling at 0.1 s
        let orbit = leo(FRAC_PI_2, FRAC_PI_2, 0.3);
        let sun = SunModel::new(EciVector::new(1.0, 0.4, 0.2)).unwrap();
        let coarse = eclipse_fraction(&orbit, &sun, 1.0);
        let period = orbit.period_s();
        let n = (period / 0.1) as usize;
        let dark = (0..n)
            .filter(|&k| {
                let p = orbit.propagate(k as f64 * period / n as f64);
                let along = p.dot(&sun.direction());
                along < 0.0 && p.norm_squared() - along * along < EARTH_RADIUS_M.powi(2)
            })
            .count();
        assert!((coarse - dark as f64 / n as f64).abs() < 1e-3);
    }

    #[test]
    fn projection_agrees_with_direct_geometry() {
        let sun = SunModel::new(EciVector::new(0.3, -0.8, 0.5)).unwrap();
        for orbit in walker_init(&reference_walker()).unwrap().iter().step_by(17) {
            let proj = SunProjection::new(orbit, &sun);
            for k in 0..200 {
                let t = k as f64 * 37.0;
                let pos = orbit.propagate(t);
                let direct = f64::from(eclipse_indicator(&pos, &sun, orbit.earth_radius_m))
                    * cosine_factor(&pos, &sun, orbit.semi_major_axis());
                let (c, s) = proj.phase_at(t);
                assert!((proj.illumination(c, s) - direct).abs() < 1e-9);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn radius_is_constant(inc in 0.0..PI, raan in 0.0..TAU, u0 in 0.0..TAU, t in 0.0..1e5f64) {
                let orbit = leo(inc, raan, u0);
                let a = orbit.semi_major_axis();
                prop_assert!((orbit.propagate(t).norm() - a).abs() / a < 1e-9);
            }

            #[test]
            fn motion_is_periodic(inc in 0.0..PI, raan in 0.0..TAU, u0 in 0.0..TAU, t in 0.0..6e3f64) {
                let orbit = leo(inc, raan, u0);
                let p0 = orbit.propagate(t);
                let p1 = orbit.propagate(t + orbit.period_s());
                prop_assert!((p0.x - p1.x).abs() < 1e-6);
                prop_assert!((p0.y - p1.y).abs() < 1e-6);
                prop_assert!((p0.z - p1.z).abs() < 1e-6);
            }

            #[test]
            fn shadow_implies_zero_cosine(inc in 0.0..PI, raan in 0.0..TAU, u0 in 0.0..TAU, t in 0.0..6e3f64) {
                let orbit = leo(inc, raan, u0);
                let sun = SunModel::default();
                let pos = orbit.propagate(t);
                if eclipse_indicator(&pos, &sun, orbit.earth_radius_m) == 0 {
                    prop_assert!(pos.dot(&sun.direction()) < 0.0);
                    prop_assert_eq!(cosine_factor(&pos, &sun, orbit.semi_major_axis()), 0.0);
                }
            }
        }
    }
}
