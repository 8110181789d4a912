//! Maximum safe velocity per frequency band.
//!
//! The outage rate of the ego-blocker link is flat in velocity while the
//! cooperative-perception requirement grows with it, so the largest safe
//! velocity is the crossing point of the two curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::curve::{Axis, CurvePoint, Provenance, RateCurve, RateValue};

use crate::channel::{capacity_samples, AntennaHeights, Diversity, LinkGeometry, OutageSpec, RadioConfig};
use crate::error::{ensure, Error};
use crate::perception::{PerceptionMode, PerceptionSetup, VelocityCeiling};
use crate::seed;
use crate::Result;

/// What stops the velocity from going higher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binding {
    /// The required rate exceeds the achieved outage rate.
    LinkRate,
    /// The search ceiling was reached with rate to spare.
    SearchCap,
    /// No velocity up to the cap puts the oncoming vehicle beyond the
    /// blocking vehicle.
    InfeasibleGeometry,
}

impl Binding {
    pub fn label(self) -> &'static str {
        match self {
            Binding::LinkRate => "link-rate",
            Binding::SearchCap => "search-cap",
            Binding::InfeasibleGeometry => "infeasible-geometry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// km/h
    pub v_cap: f64,
    /// Bisection stops once the bracket is this narrow, km/h.
    pub tolerance: f64,
    /// Spacing of the required-rate dump in the report, km/h.
    pub curve_step: f64,
    pub diversity: Diversity,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            v_cap: 300.0,
            tolerance: 0.01,
            curve_step: 1.0,
            diversity: Diversity::Selection,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        ensure(self.v_cap > 0.0 && self.v_cap.is_finite(), "v_cap", || {
            format!("must be > 0, got {}", self.v_cap)
        })?;
        ensure(self.tolerance > 0.0, "tolerance", || {
            format!("must be > 0, got {}", self.tolerance)
        })?;
        ensure(self.curve_step > 0.0, "curve_step", || {
            format!("must be > 0, got {}", self.curve_step)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocitySolution {
    pub v_max: f64,
    pub binding: Binding,
    /// Post-hoc bracket check: for a link-rate result, the requirement is
    /// met at `v_max` and violated at `v_max + 2 * tolerance`.
    pub verified: bool,
}

/// Largest `v` in `[0, v_cap]` whose requirement fits within `achieved`.
///
/// `required` must be nondecreasing wherever it is finite and may be
/// [`RateValue::Absent`] only below some velocity.
pub fn solve_max_velocity<F>(required: F, achieved: f64, settings: &SolverSettings) -> Result<VelocitySolution>
where
    F: Fn(f64) -> Result<RateValue>,
{
    settings.validate()?;
    let cap = settings.v_cap;
    let fits = |v: f64| -> Result<bool> {
        Ok(matches!(required(v)?, RateValue::Finite(r) if r <= achieved))
    };
    let defined = |v: f64| -> Result<bool> { Ok(required(v)? != RateValue::Absent) };

    if !defined(cap)? {
        return Ok(VelocitySolution {
            v_max: 0.0,
            binding: Binding::InfeasibleGeometry,
            verified: true,
        });
    }
    if fits(cap)? {
        return Ok(VelocitySolution {
            v_max: cap,
            binding: Binding::SearchCap,
            verified: true,
        });
    }

    // Lowest velocity with defined geometry.
    let mut lo = 0.0;
    if !defined(lo)? {
        let mut hi = cap;
        while hi - lo > 1e-9 * cap {
            let mid = 0.5 * (lo + hi);
            if defined(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo = hi;
    }
    if !fits(lo)? {
        return Ok(VelocitySolution {
            v_max: 0.0,
            binding: Binding::LinkRate,
            verified: true,
        });
    }

    let mut hi = cap;
    while hi - lo > settings.tolerance {
        let mid = 0.5 * (lo + hi);
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let verified = fits(lo)? && !fits(lo + 2.0 * settings.tolerance)?;
    Ok(VelocitySolution {
        v_max: lo,
        binding: Binding::LinkRate,
        verified,
    })
}

/// One row of a [`FeasibilityReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandFeasibility {
    pub label: String,
    pub carrier_freq: f64,
    pub v_max: f64,
    pub binding: Binding,
    pub verified: bool,
    /// Achieved outage rate on the ego-blocker link, bit/s.
    pub outage_rate: f64,
    /// Seed of this band's Monte Carlo.
    pub seed: u64,
    /// Reported for comparison; does not limit `v_max`.
    pub ego_ceiling: VelocityCeiling,
    pub required: RateCurve,
    pub achieved: RateCurve,
}

/// Maximum safe velocity for one band: the outage rate at link distance
/// `d_be` against the cooperative requirement.
pub fn max_safe_velocity(
    setup: &PerceptionSetup,
    label: &str,
    radio: &RadioConfig,
    heights: &AntennaHeights,
    spec: &OutageSpec,
    settings: &SolverSettings,
) -> Result<BandFeasibility> {
    setup.validate()?;
    settings.validate()?;
    let geom = LinkGeometry::new(setup.scenario.d_be, heights, radio)?;
    let outage_rate =
        capacity_samples(&geom, radio, spec, 0)?.outage_rate(spec.outage_prob, settings.diversity)?;
    let solution = solve_max_velocity(
        |v| setup.rate_value(v, PerceptionMode::Cooperative),
        outage_rate,
        settings,
    )?;

    let grid = velocity_grid(settings.v_cap, settings.curve_step);
    let required = setup.required_rate_curve(&grid, PerceptionMode::Cooperative)?;
    let achieved = RateCurve::new(
        Axis::VelocityKmh,
        grid.iter()
            .map(|&x| CurvePoint {
                x,
                rate: RateValue::Finite(outage_rate),
            })
            .collect(),
    )?;
    Ok(BandFeasibility {
        label: label.to_owned(),
        carrier_freq: radio.carrier_freq,
        v_max: solution.v_max,
        binding: solution.binding,
        verified: solution.verified,
        outage_rate,
        seed: spec.seed,
        ego_ceiling: setup.ego_visibility_ceiling(),
        required,
        achieved,
    })
}

/// `0, step, 2 step, ...` up to and including `cap`.
fn velocity_grid(cap: f64, step: f64) -> Vec<f64> {
    let n = (cap / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if cap - grid[n] > 1e-9 * cap {
        grid.push(cap);
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub d_be: f64,
    pub tolerance: f64,
    pub entries: Vec<BandFeasibility>,
}

impl FeasibilityReport {
    /// True when each band allows a strictly higher velocity than the one
    /// before it.
    pub fn strictly_increasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].v_max > w[0].v_max)
    }

    pub fn all_verified(&self) -> bool {
        self.entries.iter().all(|e| e.verified)
    }
}

/// Seed of a band's Monte Carlo, keyed by carrier frequency so a band's
/// result does not depend on which other bands run alongside it.
pub fn band_seed(root: u64, radio: &RadioConfig) -> u64 {
    seed::derive_tagged(root, "band", &[radio.carrier_freq.to_bits()])
}

/// Runs [`max_safe_velocity`] for every band, preserving order.
pub fn compare_bands(
    setup: &PerceptionSetup,
    bands: &[(String, RadioConfig)],
    heights: &AntennaHeights,
    spec: &OutageSpec,
    settings: &SolverSettings,
) -> Result<FeasibilityReport> {
    if bands.is_empty() {
        return Err(Error::domain("presets", "at least one band is required"));
    }
    let entries = bands
        .par_iter()
        .map(|(label, radio)| {
            let band_spec = OutageSpec {
                seed: band_seed(spec.seed, radio),
                ..*spec
            };
            max_safe_velocity(setup, label, radio, heights, &band_spec, settings)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeasibilityReport {
        d_be: setup.scenario.d_be,
        tolerance: settings.tolerance,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Band;

    fn linear(v: f64) -> Result<RateValue> {
        Ok(RateValue::Finite(10e6 * v))
    }

    #[test]
    fn synthetic_linear_requirement() {
        let s = solve_max_velocity(linear, 500e6, &SolverSettings::default()).unwrap();
        assert_eq!(s.binding, Binding::LinkRate);
        assert!((s.v_max - 50.0).abs() <= 0.01, "{}", s.v_max);
        assert!(s.v_max <= 50.0);
        assert!(s.verified);
    }

    #[test]
    fn search_cap_and_no_link() {
        let s = solve_max_velocity(linear, 1e12, &SolverSettings::default()).unwrap();
        assert_eq!((s.v_max, s.binding), (300.0, Binding::SearchCap));
        let real = PerceptionSetup::default();
        let s = solve_max_velocity(
            |v| real.rate_value(v, PerceptionMode::Cooperative),
            0.0,
            &SolverSettings::default(),
        )
        .unwrap();
        assert_eq!(s.v_max, 0.0);
    }

    #[test]
    fn geometry_never_feasible() {
        let far_blocker = PerceptionSetup::default().with_d_be(10_000.0);
        let s = solve_max_velocity(
            |v| far_blocker.rate_value(v, PerceptionMode::Cooperative),
            1e12,
            &SolverSettings::default(),
        )
        .unwrap();
        assert_eq!((s.v_max, s.binding), (0.0, Binding::InfeasibleGeometry));
    }

    #[test]
    fn real_requirement_brackets() {
        let setup = PerceptionSetup::default();
        let achieved = 5e9;
        let s = solve_max_velocity(
            |v| setup.rate_value(v, PerceptionMode::Cooperative),
            achieved,
            &SolverSettings::default(),
        )
        .unwrap();
        assert!(s.verified);
        assert!(setup.required_data_rate(s.v_max).unwrap() <= achieved);
        assert!(setup.required_data_rate(s.v_max + 0.02).unwrap() > achieved);
    }

    #[test]
    fn v_max_monotone_in_achieved_rate() {
        let setup = PerceptionSetup::default();
        let mut prev = 0.0;
        for achieved in [1e8, 5e8, 1e9, 4e9, 1.6e10] {
            let s = solve_max_velocity(
                |v| setup.rate_value(v, PerceptionMode::Cooperative),
                achieved,
                &SolverSettings::default(),
            )
            .unwrap();
            assert!(s.v_max >= prev);
            prev = s.v_max;
        }
    }

    #[test]
    fn grid_includes_cap() {
        assert_eq!(velocity_grid(3.0, 1.0), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(velocity_grid(2.5, 1.0), vec![0.0, 1.0, 2.0, 2.5]);
    }

    fn quick_spec() -> OutageSpec {
        OutageSpec {
            outage_prob: 1e-2,
            n_samples: 1_000,
            seed: 17,
            force: false,
        }
    }

    #[test]
    fn zero_power_means_zero_velocity() {
        let bands: Vec<_> = Band::ALL
            .iter()
            .map(|&b| {
                let mut r = RadioConfig::preset(b);
                r.tx_power = 0.0;
                (b.name().to_owned(), r)
            })
            .collect();
        let report = compare_bands(
            &PerceptionSetup::default(),
            &bands,
            &AntennaHeights::default(),
            &quick_spec(),
            &SolverSettings::default(),
        )
        .unwrap();
        assert_eq!(report.entries.len(), 3);
        assert!(report.entries.iter().all(|e| e.v_max == 0.0 && e.outage_rate == 0.0));
        assert!(!report.strictly_increasing());
    }

    #[test]
    fn single_band_report_equals_direct_call() {
        let radio = RadioConfig::preset(Band::Ghz60);
        let setup = PerceptionSetup::default();
        let heights = AntennaHeights::default();
        let spec = quick_spec();
        let settings = SolverSettings::default();
        let report =
            compare_bands(&setup, &[("60ghz".into(), radio)], &heights, &spec, &settings).unwrap();
        let direct = max_safe_velocity(
            &setup,
            "60ghz",
            &radio,
            &heights,
            &OutageSpec {
                seed: band_seed(spec.seed, &radio),
                ..spec
            },
            &settings,
        )
        .unwrap();
        assert_eq!(report.entries, vec![direct]);
        assert!(compare_bands(&setup, &[], &heights, &spec, &settings).is_err());
    }
}
