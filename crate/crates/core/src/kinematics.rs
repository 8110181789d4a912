//! Braking distance and the safety gap required at detection time.
//!
//! Speeds cross this module's boundary in km/h; distances are in meters.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error};
use crate::Result;

/// Comfortable-braking model `d = c * v^2 / a` with `v` in km/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KinematicsParams {
    pub decel_coefficient: f64,
    /// m/s²
    pub comfortable_decel: f64,
    /// Driver/system reaction time in seconds. Zero reproduces the pure
    /// braking model; a positive value adds the distance travelled before
    /// braking starts.
    pub reaction_time: f64,
}

impl Default for KinematicsParams {
    fn default() -> Self {
        Self {
            decel_coefficient: 0.039,
            comfortable_decel: 3.4,
            reaction_time: 0.0,
        }
    }
}

impl KinematicsParams {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.decel_coefficient > 0.0 && self.decel_coefficient.is_finite(),
            "decel_coefficient",
            || format!("must be > 0, got {}", self.decel_coefficient),
        )?;
        ensure(
            self.comfortable_decel > 0.0 && self.comfortable_decel.is_finite(),
            "comfortable_decel",
            || format!("must be > 0, got {}", self.comfortable_decel),
        )?;
        ensure(
            self.reaction_time >= 0.0 && self.reaction_time.is_finite(),
            "reaction_time",
            || format!("must be >= 0, got {}", self.reaction_time),
        )
    }

    /// Braking distance in meters for a speed in km/h.
    pub fn braking_distance(&self, v_kmh: f64) -> Result<f64> {
        check_speed(v_kmh)?;
        let braking = self.decel_coefficient * v_kmh * v_kmh / self.comfortable_decel;
        Ok(braking + self.reaction_time * v_kmh / 3.6)
    }

    /// Ego-to-oncoming distance at which detection must succeed: twice the
    /// braking distance.
    pub fn safety_gap(&self, v_kmh: f64) -> Result<f64> {
        Ok(2.0 * self.braking_distance(v_kmh)?)
    }

    /// Inverse of [`safety_gap`](Self::safety_gap).
    pub fn velocity_for_gap(&self, d_oe: f64) -> Result<f64> {
        if d_oe.is_nan() || d_oe < 0.0 {
            return Err(Error::domain("d_oe", format!("must be >= 0, got {d_oe}")));
        }
        let a = self.decel_coefficient / self.comfortable_decel;
        if self.reaction_time == 0.0 {
            return Ok((d_oe / (2.0 * a)).sqrt());
        }
        // a v² + b v - d/2 = 0
        let b = self.reaction_time / 3.6;
        Ok((-b + (b * b + 2.0 * a * d_oe).sqrt()) / (2.0 * a))
    }
}

fn check_speed(v_kmh: f64) -> Result<()> {
    ensure(v_kmh >= 0.0, "v", || format!("speed must be >= 0 km/h, got {v_kmh}"))
}
