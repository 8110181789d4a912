//! Road footprint of a roadside unit's directive beam and the beamforming
//! training (sector level sweep) budget needed to track a passing vehicle.
//!
//! Geometry is two-dimensional: flat road, RSU and OBU in one vertical
//! plane, beam described by its depression angle below horizontal and its
//! half-power beamwidth.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamGeometry {
    /// m
    pub rsu_height: f64,
    /// m
    pub obu_height: f64,
    /// Half-power beamwidth, rad.
    pub hpbw: f64,
    /// m
    pub max_range: f64,
}

impl Default for BeamGeometry {
    fn default() -> Self {
        Self {
            rsu_height: 6.0,
            obu_height: 1.0,
            hpbw: 20f64.to_radians(),
            max_range: 200.0,
        }
    }
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        ensure(self.rsu_height > self.obu_height, "rsu_height", || {
            format!("must exceed obu_height ({} <= {})", self.rsu_height, self.obu_height)
        })?;
        ensure(self.obu_height >= 0.0, "obu_height", || {
            format!("must be >= 0, got {}", self.obu_height)
        })?;
        ensure(self.hpbw > 0.0 && self.hpbw < FRAC_PI_2, "hpbw", || {
            format!("must lie in (0, π/2), got {}", self.hpbw)
        })?;
        ensure(self.max_range > 0.0, "max_range", || {
            format!("must be > 0, got {}", self.max_range)
        })
    }

    fn height_difference(&self) -> f64 {
        self.rsu_height - self.obu_height
    }

    /// Boresight depressions whose beam edges stay between horizontal and
    /// vertical.
    pub fn boresight_range(&self) -> (f64, f64) {
        (self.hpbw / 2.0, FRAC_PI_2 - self.hpbw / 2.0)
    }
}

/// Stretch of road (ground distance from the RSU mast) inside the beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub d_near: f64,
    pub d_far: f64,
    pub length: f64,
}

/// Footprint of a beam tilted `boresight_depression` rad below horizontal.
pub fn beam_footprint(geom: &BeamGeometry, boresight_depression: f64) -> Result<Footprint> {
    geom.validate()?;
    ensure(
        (0.0..=FRAC_PI_2).contains(&boresight_depression),
        "boresight_depression",
        || format!("must lie in [0, π/2], got {boresight_depression}"),
    )?;
    let dh = geom.height_difference();
    let half = geom.hpbw / 2.0;
    let steep = boresight_depression + half;
    let shallow = boresight_depression - half;
    let d_near = if steep >= FRAC_PI_2 {
        0.0
    } else {
        (dh / steep.tan()).min(geom.max_range)
    };
    let d_far = if shallow <= 0.0 {
        geom.max_range
    } else {
        (dh / shallow.tan()).min(geom.max_range)
    };
    debug_assert!(d_far >= d_near, "footprint inverted: {d_near} > {d_far}");
    Ok(Footprint {
        d_near,
        d_far,
        length: d_far - d_near,
    })
}

/// Boresight depression that puts the far beam edge at `target_far`.
pub fn boresight_for_far_edge(geom: &BeamGeometry, target_far: f64) -> Result<f64> {
    geom.validate()?;
    if !(target_far > 0.0 && target_far <= geom.max_range) {
        return Err(Error::domain(
            "target_far",
            format!("must lie in (0, {}], got {target_far}", geom.max_range),
        ));
    }
    Ok((geom.height_difference() / target_far).atan() + geom.hpbw / 2.0)
}

/// Time a vehicle at `v_kmh` spends crossing a footprint, s.
pub fn connection_time(footprint_length: f64, v_kmh: f64) -> Result<f64> {
    ensure(v_kmh > 0.0, "v", || format!("speed must be > 0 km/h, got {v_kmh}"))?;
    ensure(footprint_length >= 0.0, "footprint_length", || {
        format!("must be >= 0, got {footprint_length}")
    })?;
    Ok(footprint_length / crate::kmh_to_mps(v_kmh))
}

/// Sector level sweep timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BftTiming {
    /// Sector sweep frames per sweep.
    pub n_ssw: u32,
    /// Airtime of one SSW frame, s.
    pub t_ssw: f64,
    /// Short beamforming interframe space, s.
    pub t_sbifs: f64,
    pub t_feedback: f64,
    pub t_ack: f64,
    pub beacon_interval: f64,
    /// Training opportunities per beacon interval.
    pub bft_per_bi: u32,
}

impl Default for BftTiming {
    fn default() -> Self {
        Self {
            n_ssw: 32,
            t_ssw: 15.8e-6,
            t_sbifs: 1.0e-6,
            t_feedback: 16.0e-6,
            t_ack: 9.2e-6,
            beacon_interval: 0.1,
            bft_per_bi: 2,
        }
    }
}

impl BftTiming {
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("t_ssw", self.t_ssw),
            ("t_sbifs", self.t_sbifs),
            ("t_feedback", self.t_feedback),
            ("t_ack", self.t_ack),
            ("beacon_interval", self.beacon_interval),
        ] {
            ensure(value > 0.0, field, || format!("must be > 0, got {value}"))?;
        }
        ensure(self.bft_per_bi >= 1, "bft_per_bi", || "must be >= 1".into())
    }

    /// Interval between training opportunities, s.
    pub fn bft_period(&self) -> f64 {
        self.beacon_interval / f64::from(self.bft_per_bi)
    }
}

/// Initiator and responder sweeps followed by feedback and ack, s.
pub fn bft_duration(t: &BftTiming) -> f64 {
    2.0 * f64::from(t.n_ssw) * (t.t_ssw + t.t_sbifs) + t.t_feedback + t.t_ack
}

/// Boresight step of the worst-case footprint search.
pub const BORESIGHT_SEARCH_STEP: f64 = 0.1 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingVerdict {
    pub feasible: bool,
    /// Boresight with the shortest footprint, rad.
    pub worst_boresight: f64,
    pub worst_footprint: f64,
    /// Time in the shortest footprint, s.
    pub worst_dwell: f64,
    pub bft_period: f64,
    pub bft_duration: f64,
    /// `worst_dwell - bft_period`; nonnegative when a training opportunity
    /// always falls inside the dwell.
    pub dwell_margin: f64,
    /// `bft_period - bft_duration`; positive when training fits its slot.
    pub airtime_margin: f64,
}

/// Shortest footprint over boresights from `hpbw/2` to `π/2 - hpbw/2`.
pub fn shortest_footprint(geom: &BeamGeometry) -> Result<(f64, Footprint)> {
    geom.validate()?;
    let (lo, hi) = geom.boresight_range();
    let steps = ((hi - lo) / BORESIGHT_SEARCH_STEP).floor() as usize;
    let mut angles: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * BORESIGHT_SEARCH_STEP).collect();
    if angles.last().is_some_and(|&a| a < hi) {
        angles.push(hi);
    }
    let mut best: Option<(f64, Footprint)> = None;
    for theta in angles {
        let fp = beam_footprint(geom, theta)?;
        if best.is_none_or(|(_, b)| fp.length < b.length) {
            best = Some((theta, fp));
        }
    }
    Ok(best.expect("boresight range is nonempty"))
}

/// Whether beam tracking keeps up with a vehicle at `v_kmh`.
pub fn tracking_feasibility(geom: &BeamGeometry, t: &BftTiming, v_kmh: f64) -> Result<TrackingVerdict> {
    t.validate()?;
    let (worst_boresight, fp) = shortest_footprint(geom)?;
    let worst_dwell = connection_time(fp.length, v_kmh)?;
    let bft_period = t.bft_period();
    let duration = bft_duration(t);
    let dwell_margin = worst_dwell - bft_period;
    let airtime_margin = bft_period - duration;
    Ok(TrackingVerdict {
        feasible: dwell_margin >= 0.0 && airtime_margin > 0.0,
        worst_boresight,
        worst_footprint: fp.length,
        worst_dwell,
        bft_period,
        bft_duration: duration,
        dwell_margin,
        airtime_margin,
    })
}
