//! Numerical feasibility analysis for millimeter-wave V2V/V2I links carrying
//! LiDAR sensor-sharing traffic.
//!
//! The crate is organised bottom-up:
//!
//! - [`kinematics`]: braking distance and safety gap.
//! - [`perception`]: LiDAR hit-count geometry and the required V2V data rate.
//! - [`channel`]: two-ray ground reflection channel, selection diversity and
//!   Monte Carlo outage rates.
//! - [`feasibility`]: maximum safe velocity per frequency band.
//! - [`beamtraining`]: RSU beam footprint and beamforming-training budget.
//!
//! All operations are pure functions of their inputs. Monte Carlo runs draw
//! from counter-based random streams (see [`seed`]) so results do not depend
//! on the number of worker threads.

pub mod beamtraining;
pub mod channel;
pub mod curve;
mod error;
pub mod feasibility;
pub mod kinematics;
pub mod perception;
pub mod seed;

pub use error::{Error, Result};

/// Converts km/h to m/s.
pub fn kmh_to_mps(v_kmh: f64) -> f64 {
    v_kmh / 3.6
}

/// Converts m/s to km/h.
pub fn mps_to_kmh(v_mps: f64) -> f64 {
    v_mps * 3.6
}
