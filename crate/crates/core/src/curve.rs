//! Sampled rate curves over velocity or distance.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// What the abscissa of a [`RateCurve`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    VelocityKmh,
    InterVehicleDistanceM,
    LinkDistanceM,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::VelocityKmh => "v_kmh",
            Axis::InterVehicleDistanceM => "d_be_m",
            Axis::LinkDistanceM => "d_m",
        }
    }
}

/// Rate at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateValue {
    /// bit/s
    Finite(f64),
    /// No finite rate suffices (e.g. ego sensor occluded).
    Unreachable,
    /// Not defined at this point (e.g. oncoming vehicle nearer than the
    /// blocking vehicle).
    Absent,
}

impl RateValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            RateValue::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_reachable(self) -> bool {
        matches!(self, RateValue::Finite(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub rate: RateValue,
}

/// Where a curve came from, so it can be regenerated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    axis: Axis,
    points: Vec<CurvePoint>,
    provenance: Option<Provenance>,
}

impl RateCurve {
    /// Builds a curve, checking abscissas strictly increase and finite rates
    /// are nonnegative.
    pub fn new(axis: Axis, points: Vec<CurvePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("grid", "curve needs at least one point"));
        }
        if let Some(w) = points.windows(2).find(|w| !(w[1].x > w[0].x)) {
            return Err(Error::domain(
                "grid",
                format!("abscissas must strictly increase ({} then {})", w[0].x, w[1].x),
            ));
        }
        if let Some(p) = points
            .iter()
            .find(|p| matches!(p.rate, RateValue::Finite(r) if !(r >= 0.0)))
        {
            return Err(Error::domain(
                "rate",
                format!("negative or NaN rate {:?} at x = {}", p.rate, p.x),
            ));
        }
        Ok(Self {
            axis,
            points,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rejects empty or non-ascending grids.
pub(crate) fn check_grid(field: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain(field, "grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain(field, "grid contains a non-finite value"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain(field, "grid must be strictly ascending"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, r: f64) -> CurvePoint {
        CurvePoint {
            x,
            rate: RateValue::Finite(r),
        }
    }

    #[test]
    fn rejects_unordered_and_negative() {
        assert!(RateCurve::new(Axis::VelocityKmh, vec![pt(1.0, 1.0), pt(1.0, 2.0)]).is_err());
        assert!(RateCurve::new(Axis::VelocityKmh, vec![pt(1.0, -1.0)]).is_err());
        assert!(RateCurve::new(Axis::VelocityKmh, vec![]).is_err());
        let ok = RateCurve::new(
            Axis::LinkDistanceM,
            vec![
                pt(1.0, 0.0),
                CurvePoint {
                    x: 2.0,
                    rate: RateValue::Unreachable,
                },
            ],
        )
        .unwrap();
        assert_eq!(ok.len(), 2);
        assert!(!ok.points()[1].rate.is_reachable());
    }

    #[test]
    fn grid_checks() {
        assert!(check_grid("v", &[]).is_err());
        assert!(check_grid("v", &[2.0, 1.0]).is_err());
        assert!(check_grid("v", &[0.0, 1.0]).is_ok());
    }
}
