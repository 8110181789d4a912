//! LiDAR geometry for the overtaking scenario.
//!
//! The ego vehicle follows a blocking vehicle at distance `d_be` and wants to
//! pull into the oncoming lane. Detection of the oncoming vehicle must
//! succeed while it is still at least the safety gap `d_oe` away. With
//! cooperative perception the blocking vehicle's LiDAR does the sensing and
//! its point cloud is streamed to the ego vehicle over V2V, which sets the
//! required link rate.
//!
//! The N lasers of a scan are modelled as a uniform angular grid over the
//! sensor's field of view, so a surface at distance `d` receives
//! `N * f_az * f_el` hits where `f_*` are the fractions of the field of view
//! it subtends (clipped at 1).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{check_grid, Axis, CurvePoint, RateCurve, RateValue};
use crate::error::{ensure, Error};
use crate::kinematics::KinematicsParams;
use crate::Result;

/// Geometry of ego, blocking and oncoming vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OvertakeScenario {
    /// Ego to blocking vehicle distance, m.
    pub d_be: f64,
    /// Lateral distance between the centres of the driving and oncoming
    /// lanes, m.
    pub lane_offset: f64,
    pub blocker_width: f64,
    /// Carried for the scenario description; the binary occlusion test only
    /// looks at the blocker's near edge.
    pub blocker_length: f64,
    /// Distance from a vehicle's reference point forward to its LiDAR, m.
    pub sensor_longitudinal_offset: f64,
}

impl Default for OvertakeScenario {
    fn default() -> Self {
        Self {
            d_be: 10.0,
            lane_offset: 3.5,
            blocker_width: 1.8,
            blocker_length: 4.5,
            sensor_longitudinal_offset: 0.0,
        }
    }
}

impl OvertakeScenario {
    pub fn with_d_be(self, d_be: f64) -> Self {
        Self { d_be, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.d_be > 0.0, "d_be", || format!("must be > 0, got {}", self.d_be))?;
        ensure(self.lane_offset > 0.0, "lane_offset", || {
            format!("must be > 0, got {}", self.lane_offset)
        })?;
        ensure(self.blocker_width > 0.0, "blocker_width", || {
            format!("must be > 0, got {}", self.blocker_width)
        })?;
        ensure(self.blocker_length >= 0.0, "blocker_length", || {
            format!("must be >= 0, got {}", self.blocker_length)
        })?;
        ensure(
            self.sensor_longitudinal_offset.is_finite(),
            "sensor_longitudinal_offset",
            || "must be finite".into(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarConfig {
    /// Lasers per scan of the installed sensor.
    pub n_lasers: u64,
    /// rad
    pub fov_azimuth: f64,
    /// rad
    pub fov_elevation: f64,
    /// s
    pub scan_period: f64,
    pub bits_per_laser: f64,
    /// Reflected lasers per target surface needed for detection.
    pub detection_threshold: f64,
}

impl Default for LidarConfig {
    /// Calibrated so that the cooperative requirement is about 1 Gbit/s at
    /// 70 km/h with a 10 m gap to the blocking vehicle.
    fn default() -> Self {
        Self {
            n_lasers: 1_000_000,
            fov_azimuth: 2.0 * PI,
            // 30 degrees, rounded as in the calibration
            fov_elevation: 0.5236,
            scan_period: 0.1,
            bits_per_laser: 96.0,
            detection_threshold: 30.0,
        }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.fov_azimuth > 0.0 && self.fov_azimuth <= 2.0 * PI,
            "fov_azimuth",
            || format!("must lie in (0, 2π], got {}", self.fov_azimuth),
        )?;
        ensure(
            self.fov_elevation > 0.0 && self.fov_elevation < PI,
            "fov_elevation",
            || format!("must lie in (0, π), got {}", self.fov_elevation),
        )?;
        ensure(self.scan_period > 0.0, "scan_period", || {
            format!("must be > 0, got {}", self.scan_period)
        })?;
        ensure(self.bits_per_laser >= 0.0, "bits_per_laser", || {
            format!("must be >= 0, got {}", self.bits_per_laser)
        })?;
        ensure(
            self.detection_threshold >= 0.0 && self.detection_threshold.is_finite(),
            "detection_threshold",
            || format!("must be >= 0, got {}", self.detection_threshold),
        )
    }
}

/// Patch on the target object whose hit count is thresholded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetSurface {
    pub width: f64,
    pub height: f64,
}

impl Default for TargetSurface {
    fn default() -> Self {
        Self {
            width: 1.0,
            height: 1.0,
        }
    }
}

impl TargetSurface {
    pub fn validate(&self) -> Result<()> {
        ensure(self.width > 0.0, "surface.width", || format!("must be > 0, got {}", self.width))?;
        ensure(self.height > 0.0, "surface.height", || {
            format!("must be > 0, got {}", self.height)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PerceptionMode {
    /// Only the ego vehicle's own LiDAR.
    EgoOnly,
    /// The blocking vehicle's LiDAR, shared over V2V.
    Cooperative,
}

impl PerceptionMode {
    pub fn label(self) -> &'static str {
        match self {
            PerceptionMode::EgoOnly => "ego_only",
            PerceptionMode::Cooperative => "cooperative",
        }
    }
}

/// Largest safe velocity of the ego-only sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VelocityCeiling {
    Finite(f64),
    /// No occlusion limits the ego sensor.
    Unbounded,
}

impl VelocityCeiling {
    pub fn admits(self, v_kmh: f64) -> bool {
        match self {
            VelocityCeiling::Finite(c) => v_kmh <= c,
            VelocityCeiling::Unbounded => true,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            VelocityCeiling::Finite(c) => c,
            VelocityCeiling::Unbounded => f64::INFINITY,
        }
    }
}

/// Fractions of the azimuth and elevation field of view subtended by the
/// surface at `distance`.
pub fn subtended_fractions(
    distance: f64,
    lidar: &LidarConfig,
    surface: &TargetSurface,
) -> Result<(f64, f64)> {
    ensure(distance > 0.0, "sensing_distance", || {
        format!("must be > 0, got {distance}")
    })?;
    let f_az = (2.0 * (surface.width / (2.0 * distance)).atan() / lidar.fov_azimuth).min(1.0);
    let f_el = (2.0 * (surface.height / (2.0 * distance)).atan() / lidar.fov_elevation).min(1.0);
    Ok((f_az, f_el))
}

/// Expected number of reflected lasers on the surface at `sensing_distance`
/// when the sensor fires `n_lasers` per scan.
pub fn lasers_on_target(
    n_lasers: u64,
    sensing_distance: f64,
    lidar: &LidarConfig,
    surface: &TargetSurface,
) -> Result<f64> {
    let (f_az, f_el) = subtended_fractions(sensing_distance, lidar, surface)?;
    Ok(n_lasers as f64 * f_az * f_el)
}

/// Smallest `N` with `lasers_on_target(N, distance) >= threshold`.
///
/// Closed form `ceil(threshold / (f_az * f_el))`, nudged by at most a step
/// either way so the result agrees with the floating-point hit count.
pub fn min_lasers_at(distance: f64, lidar: &LidarConfig, surface: &TargetSurface) -> Result<u64> {
    let threshold = lidar.detection_threshold;
    if threshold <= 0.0 {
        return Ok(0);
    }
    let (f_az, f_el) = subtended_fractions(distance, lidar, surface)?;
    let hits = |n: u64| n as f64 * f_az * f_el;
    let mut n = (threshold / (f_az * f_el)).ceil() as u64;
    while hits(n) < threshold {
        n += 1;
    }
    while n > 0 && hits(n - 1) >= threshold {
        n -= 1;
    }
    Ok(n)
}

/// Everything needed to turn a velocity into a required data rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerceptionSetup {
    pub kinematics: KinematicsParams,
    pub scenario: OvertakeScenario,
    pub lidar: LidarConfig,
    pub surface: TargetSurface,
}

impl PerceptionSetup {
    pub fn validate(&self) -> Result<()> {
        self.kinematics.validate()?;
        self.scenario.validate()?;
        self.lidar.validate()?;
        self.surface.validate()
    }

    pub fn with_d_be(self, d_be: f64) -> Self {
        Self {
            scenario: self.scenario.with_d_be(d_be),
            ..self
        }
    }

    /// Distance from the sensing LiDAR to the oncoming vehicle when the
    /// ego vehicle is at the safety gap. May be nonpositive.
    pub fn sensing_distance(&self, v_kmh: f64, mode: PerceptionMode) -> Result<f64> {
        let d_oe = self.kinematics.safety_gap(v_kmh)?;
        let offset = self.scenario.sensor_longitudinal_offset;
        Ok(match mode {
            PerceptionMode::Cooperative => d_oe - self.scenario.d_be - offset,
            PerceptionMode::EgoOnly => d_oe - offset,
        })
    }

    /// Minimum laser count for cooperative detection at velocity `v_kmh`.
    pub fn required_laser_count(&self, v_kmh: f64) -> Result<u64> {
        self.laser_count_for(v_kmh, PerceptionMode::Cooperative)
    }

    /// Required V2V rate (bit/s) for cooperative detection at `v_kmh`.
    pub fn required_data_rate(&self, v_kmh: f64) -> Result<f64> {
        self.rate_for(v_kmh, PerceptionMode::Cooperative)
    }

    fn laser_count_for(&self, v_kmh: f64, mode: PerceptionMode) -> Result<u64> {
        let d_s = self.sensing_distance(v_kmh, mode)?;
        if !(d_s > 0.0) {
            return Err(Error::InfeasibleGeometry { sensing_distance: d_s });
        }
        min_lasers_at(d_s, &self.lidar, &self.surface)
    }

    fn rate_for(&self, v_kmh: f64, mode: PerceptionMode) -> Result<f64> {
        let n = self.laser_count_for(v_kmh, mode)?;
        Ok(self.lidar.bits_per_laser * n as f64 / self.lidar.scan_period)
    }

    /// Largest velocity at which the ego sensor still sees the centre of
    /// the oncoming vehicle past the blocker's near edge.
    ///
    /// Top-down similar triangles: the sight line grazing the blocker edge
    /// (half a blocker width off the lane centre, `d_be` ahead) reaches the
    /// oncoming lane centre at `lane_offset * d_be / (blocker_width / 2)`.
    pub fn ego_visibility_ceiling(&self) -> VelocityCeiling {
        let s = &self.scenario;
        let d_vis = s.lane_offset * s.d_be / (s.blocker_width / 2.0);
        if !d_vis.is_finite() {
            return VelocityCeiling::Unbounded;
        }
        match self.kinematics.velocity_for_gap(d_vis) {
            Ok(v) if v.is_finite() => VelocityCeiling::Finite(v),
            _ => VelocityCeiling::Unbounded,
        }
    }

    /// Rate requirement at one velocity, with occlusion and degenerate
    /// geometry mapped onto [`RateValue`].
    pub fn rate_value(&self, v_kmh: f64, mode: PerceptionMode) -> Result<RateValue> {
        if mode == PerceptionMode::EgoOnly && !self.ego_visibility_ceiling().admits(v_kmh) {
            return Ok(RateValue::Unreachable);
        }
        match self.rate_for(v_kmh, mode) {
            Ok(r) => Ok(RateValue::Finite(r)),
            Err(Error::InfeasibleGeometry { .. }) => Ok(RateValue::Absent),
            Err(e) => Err(e),
        }
    }

    /// Required rate sampled over an ascending velocity grid.
    pub fn required_rate_curve(&self, v_grid: &[f64], mode: PerceptionMode) -> Result<RateCurve> {
        check_grid("v_grid", v_grid)?;
        self.validate()?;
        let points = v_grid
            .par_iter()
            .map(|&v| {
                Ok(CurvePoint {
                    x: v,
                    rate: self.rate_value(v, mode)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RateCurve::new(Axis::VelocityKmh, points)
    }

    /// Required rate at fixed velocity over an ascending grid of
    /// ego-to-blocker distances.
    pub fn required_rate_vs_distance(
        &self,
        v_kmh: f64,
        d_be_grid: &[f64],
        mode: PerceptionMode,
    ) -> Result<RateCurve> {
        check_grid("d_be_grid", d_be_grid)?;
        let points = d_be_grid
            .par_iter()
            .map(|&d_be| {
                let setup = self.with_d_be(d_be);
                setup.validate()?;
                Ok(CurvePoint {
                    x: d_be,
                    rate: setup.rate_value(v_kmh, mode)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RateCurve::new(Axis::InterVehicleDistanceM, points)
    }
}
