//! Degradation-aware task placement for solar-powered satellite constellations.
//!
//! The crate models a Walker constellation in circular orbits, the power
//! balance of each satellite (solar harvesting, operational load and a
//! frequency-scaled processor), and the wear of its battery as a function of
//! the depth-of-discharge path. On top of that it provides a per-satellite
//! frequency policy, several satellite-selection heuristics, a grid-search
//! baseline and a parallel experiment harness.

pub mod config;
pub mod degradation;
pub mod oracle;
pub mod orbit;
pub mod output;
pub mod power;
pub mod rng;
pub mod sched;
pub mod sim;
