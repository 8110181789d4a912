//! Sweep axes for the commands that produce curves.
//!
//! A grid is either an explicit ascending `values` list or a closed range
//! `start..=stop` in steps of `step`; when `stop` is not on the grid the
//! last point is the largest one below it.

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;

const MAX_GRID_POINTS: usize = 1_000_000;

/// Expands a grid description into points.
pub fn expand_grid(
    field: &str,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
    values: Option<&[f64]>,
) -> Result<Vec<f64>, ConfigError> {
    if let Some(values) = values {
        if values.is_empty() {
            return Err(ConfigError::invalid(format!("{field}.values"), "must not be empty"));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ConfigError::invalid(
                format!("{field}.values"),
                "must be finite and strictly ascending",
            ));
        }
        return Ok(values.to_vec());
    }
    let (Some(start), Some(stop), Some(step)) = (start, stop, step) else {
        return Err(ConfigError::invalid(field, "needs start, stop and step, or values"));
    };
    if !(start < stop) {
        return Err(ConfigError::invalid(
            format!("{field}.start"),
            format!("must be below stop ({start} >= {stop})"),
        ));
    }
    if !(step > 0.0) {
        return Err(ConfigError::invalid(format!("{field}.step"), "must be > 0"));
    }
    let span = (stop - start) / step;
    if !(span < MAX_GRID_POINTS as f64) {
        return Err(ConfigError::invalid(field, format!("more than {MAX_GRID_POINTS} points")));
    }
    let n = (span + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "v")]
    Velocity,
    #[serde(rename = "d_be")]
    InterVehicleDistance,
}

/// Axis of the `required-rate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RequiredRateSweep {
    pub variable: SweepVariable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Fixed velocity when sweeping `d_be`, km/h.
    pub v_kmh: f64,
    /// Fixed `d_be` when sweeping velocity; the scenario's own by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_be_m: Option<f64>,
}

impl Default for RequiredRateSweep {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Velocity,
            start: None,
            stop: None,
            step: None,
            values: None,
            v_kmh: 70.0,
            d_be_m: None,
        }
    }
}

fn fill_range(
    start: &mut Option<f64>,
    stop: &mut Option<f64>,
    step: &mut Option<f64>,
    values: &Option<Vec<f64>>,
    defaults: (f64, f64, f64),
) {
    if values.is_none() {
        start.get_or_insert(defaults.0);
        stop.get_or_insert(defaults.1);
        step.get_or_insert(defaults.2);
    }
}

impl RequiredRateSweep {
    pub fn resolve(&mut self, scenario_d_be: f64) {
        let defaults = match self.variable {
            SweepVariable::Velocity => (0.0, 150.0, 1.0),
            SweepVariable::InterVehicleDistance => (5.0, 30.0, 1.0),
        };
        fill_range(&mut self.start, &mut self.stop, &mut self.step, &self.values, defaults);
        self.d_be_m.get_or_insert(scenario_d_be);
    }

    pub fn grid(&self) -> Result<Vec<f64>, ConfigError> {
        expand_grid(
            "sweep.required_rate",
            self.start,
            self.stop,
            self.step,
            self.values.as_deref(),
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let grid = self.grid()?;
        match self.variable {
            SweepVariable::Velocity if grid[0] < 0.0 => Err(ConfigError::invalid(
                "sweep.required_rate",
                "velocities must be >= 0",
            )),
            SweepVariable::InterVehicleDistance if grid[0] <= 0.0 => Err(ConfigError::invalid(
                "sweep.required_rate",
                "d_be values must be > 0",
            )),
            _ if !(self.v_kmh >= 0.0) => {
                Err(ConfigError::invalid("sweep.required_rate.v_kmh", "must be >= 0"))
            }
            _ if !self.d_be_m.is_none_or(|d| d > 0.0) => {
                Err(ConfigError::invalid("sweep.required_rate.d_be_m", "must be > 0"))
            }
            _ => Ok(()),
        }
    }
}

/// Link distances of the `outage-rate` command, m.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutageSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl OutageSweep {
    pub fn resolve(&mut self) {
        fill_range(&mut self.start, &mut self.stop, &mut self.step, &self.values, (5.0, 50.0, 5.0));
    }

    pub fn grid(&self) -> Result<Vec<f64>, ConfigError> {
        expand_grid("sweep.outage_rate", self.start, self.stop, self.step, self.values.as_deref())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid()?[0] <= 0.0 {
            return Err(ConfigError::invalid("sweep.outage_rate", "distances must be > 0"));
        }
        Ok(())
    }
}

/// Boresight depressions of the `beam-analysis` command, degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Vehicle speed for dwell times and the tracking verdict, km/h.
    pub v_kmh: f64,
}

impl Default for BeamSweep {
    fn default() -> Self {
        Self {
            start: None,
            stop: None,
            step: None,
            values: None,
            v_kmh: 100.0,
        }
    }
}

impl BeamSweep {
    pub fn resolve(&mut self) {
        fill_range(&mut self.start, &mut self.stop, &mut self.step, &self.values, (10.0, 80.0, 1.0));
    }

    pub fn grid(&self) -> Result<Vec<f64>, ConfigError> {
        expand_grid("sweep.beam_analysis", self.start, self.stop, self.step, self.values.as_deref())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let grid = self.grid()?;
        if grid[0] < 0.0 || *grid.last().unwrap() > 90.0 {
            return Err(ConfigError::invalid(
                "sweep.beam_analysis",
                "boresight angles must lie in [0, 90] degrees",
            ));
        }
        if !(self.v_kmh > 0.0) {
            return Err(ConfigError::invalid("sweep.beam_analysis.v_kmh", "must be > 0"));
        }
        Ok(())
    }
}
