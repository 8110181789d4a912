//! Two-ray ground reflection V2V channel with receive antenna selection.
//!
//! The transmitter and a two-antenna receiver sit at bumper height. Each
//! receive antenna sees the direct ray plus a ray reflected off the road,
//! and the two interfere across the OFDM band. Antenna heights jitter with
//! Gaussian noise per realization; the low quantile of the resulting
//! Shannon capacity gives the outage data rate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{check_grid, Axis, CurvePoint, RateCurve, RateValue};
use crate::error::{ensure, Error};
use crate::seed;
use crate::Result;

/// Propagation speed used for wavelengths and phases, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
/// J/K
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Perturbed antenna heights never drop below this, m.
pub const MIN_ANTENNA_HEIGHT: f64 = 0.01;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Built-in frequency band presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "5ghz")]
    Ghz5,
    #[serde(rename = "30ghz")]
    Ghz30,
    #[serde(rename = "60ghz")]
    Ghz60,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Ghz5, Band::Ghz30, Band::Ghz60];

    pub fn name(self) -> &'static str {
        match self {
            Band::Ghz5 => "5ghz",
            Band::Ghz30 => "30ghz",
            Band::Ghz60 => "60ghz",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Band::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::domain("preset", format!("unknown preset {s:?}; expected 5ghz, 30ghz or 60ghz")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    /// Hz
    pub carrier_freq: f64,
    /// W
    pub tx_power: f64,
    /// dBi
    pub tx_gain: f64,
    /// dBi
    pub rx_gain: f64,
    /// Hz
    pub bandwidth: f64,
    pub n_subcarriers: usize,
    /// Vertical separation of the two receive antennas, m.
    pub rx_antenna_spacing: f64,
    /// Standard deviation of the antenna height jitter, m.
    pub fluctuation_sigma: f64,
    /// dB
    pub noise_figure: f64,
    /// K
    pub ambient_temp: f64,
    pub ground_rel_permittivity: f64,
}

impl RadioConfig {
    /// Parameters of one frequency band. The antenna gain applies at both
    /// ends of the link.
    pub fn preset(band: Band) -> Self {
        let (carrier_freq, gain, rx_antenna_spacing, bandwidth) = match band {
            Band::Ghz5 => (5e9, 4.3, 1.20, 10e6),
            Band::Ghz30 => (30e9, 20.0, 0.20, 500e6),
            Band::Ghz60 => (60e9, 26.0, 0.10, 1e9),
        };
        Self {
            carrier_freq,
            tx_power: 0.010,
            tx_gain: gain,
            rx_gain: gain,
            bandwidth,
            n_subcarriers: 512,
            rx_antenna_spacing,
            fluctuation_sigma: 0.032,
            noise_figure: 10.0,
            ambient_temp: 290.0,
            ground_rel_permittivity: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.carrier_freq > 0.0 && self.carrier_freq.is_finite(), "carrier_freq", || {
            format!("must be > 0, got {}", self.carrier_freq)
        })?;
        ensure(self.tx_power >= 0.0 && self.tx_power.is_finite(), "tx_power", || {
            format!("must be >= 0, got {}", self.tx_power)
        })?;
        ensure(self.tx_gain.is_finite(), "tx_gain", || "must be finite".into())?;
        ensure(self.rx_gain.is_finite(), "rx_gain", || "must be finite".into())?;
        ensure(self.bandwidth > 0.0 && self.bandwidth.is_finite(), "bandwidth", || {
            format!("must be > 0, got {}", self.bandwidth)
        })?;
        ensure(self.n_subcarriers >= 1, "n_subcarriers", || "must be >= 1".into())?;
        ensure(self.rx_antenna_spacing > 0.0, "rx_antenna_spacing", || {
            format!("must be > 0, got {}", self.rx_antenna_spacing)
        })?;
        ensure(
            self.fluctuation_sigma >= 0.0 && self.fluctuation_sigma.is_finite(),
            "fluctuation_sigma",
            || format!("must be >= 0, got {}", self.fluctuation_sigma),
        )?;
        ensure(self.noise_figure.is_finite(), "noise_figure", || "must be finite".into())?;
        ensure(self.ambient_temp > 0.0, "ambient_temp", || {
            format!("must be > 0, got {}", self.ambient_temp)
        })?;
        ensure(self.ground_rel_permittivity >= 1.0, "ground_rel_permittivity", || {
            format!("must be >= 1, got {}", self.ground_rel_permittivity)
        })
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Subcarrier `k` of a grid spanning `[f_c - B/2, f_c + B/2]` inclusive.
    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        let (f0, step) = self.subcarrier_grid();
        f0 + k as f64 * step
    }

    fn subcarrier_grid(&self) -> (f64, f64) {
        if self.n_subcarriers == 1 {
            (self.carrier_freq, 0.0)
        } else {
            (
                self.carrier_freq - self.bandwidth / 2.0,
                self.bandwidth / (self.n_subcarriers - 1) as f64,
            )
        }
    }

    /// Thermal noise plus receiver noise figure in one subcarrier, W.
    pub fn noise_power_per_subcarrier(&self) -> f64 {
        BOLTZMANN * self.ambient_temp * self.subcarrier_bandwidth() * db_to_linear(self.noise_figure)
    }

    pub fn subcarrier_bandwidth(&self) -> f64 {
        self.bandwidth / self.n_subcarriers as f64
    }

    /// Free-space amplitude factor `sqrt(G_t G_r) * λ / 4π`.
    fn amplitude_factor(&self) -> f64 {
        db_to_linear(self.tx_gain + self.rx_gain).sqrt() * self.wavelength() / (4.0 * PI)
    }
}

/// Mount heights that are not part of the per-band radio parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AntennaHeights {
    pub tx_height: f64,
    /// Height of the lower receive antenna; the upper one sits
    /// `rx_antenna_spacing` above it.
    pub rx_height_low: f64,
}

impl Default for AntennaHeights {
    fn default() -> Self {
        Self {
            tx_height: 0.7,
            rx_height_low: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Horizontal TX-RX separation, m.
    pub distance: f64,
    pub tx_height: f64,
    pub rx_height_low: f64,
    pub rx_height_high: f64,
}

impl LinkGeometry {
    pub fn new(distance: f64, heights: &AntennaHeights, radio: &RadioConfig) -> Result<Self> {
        let g = Self {
            distance,
            tx_height: heights.tx_height,
            rx_height_low: heights.rx_height_low,
            rx_height_high: heights.rx_height_low + radio.rx_antenna_spacing,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.distance > 0.0 && self.distance.is_finite(), "distance", || {
            format!("must be > 0, got {}", self.distance)
        })?;
        ensure(self.tx_height > 0.0, "tx_height", || {
            format!("must be > 0, got {}", self.tx_height)
        })?;
        ensure(self.rx_height_low > 0.0, "rx_height_low", || {
            format!("must be > 0, got {}", self.rx_height_low)
        })?;
        ensure(self.rx_height_high > self.rx_height_low, "rx_height_high", || {
            format!(
                "must exceed rx_height_low ({} <= {})",
                self.rx_height_high, self.rx_height_low
            )
        })
    }

    pub fn rx_height(&self, branch: RxBranch) -> f64 {
        match branch {
            RxBranch::Low => self.rx_height_low,
            RxBranch::High => self.rx_height_high,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RxBranch {
    Low,
    High,
}

/// Receiver combining strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Diversity {
    /// Pick the branch with higher capacity per realization.
    Selection,
    /// Single antenna: the low branch.
    LowOnly,
}

impl Diversity {
    pub fn from_enabled(enabled: bool) -> Self {
        if enabled {
            Diversity::Selection
        } else {
            Diversity::LowOnly
        }
    }

    pub fn enabled(self) -> bool {
        self == Diversity::Selection
    }
}

/// Fresnel reflection coefficient for vertical (parallel) polarization at
/// grazing angle `grazing_angle` above a lossless dielectric ground.
pub fn fresnel_reflection(grazing_angle: f64, eps_r: f64) -> Result<Complex64> {
    ensure(
        grazing_angle > 0.0 && grazing_angle <= PI / 2.0,
        "grazing_angle",
        || format!("must lie in (0, π/2], got {grazing_angle}"),
    )?;
    ensure(eps_r >= 1.0, "eps_r", || format!("must be >= 1, got {eps_r}"))?;
    let sin = grazing_angle.sin();
    // eps_r - cos² written so that eps_r = 1 gives exactly |sin|
    let root = ((eps_r - 1.0) + sin * sin).sqrt();
    Ok(Complex64::new((eps_r * sin - root) / (eps_r * sin + root), 0.0))
}

/// `exp(-j 2π f r / c)`, reducing the cycle count before the trig call.
fn propagation_phasor(freq: f64, path: f64) -> Complex64 {
    let cycles = freq * path / SPEED_OF_LIGHT;
    let (sin, cos) = (-2.0 * PI * (cycles - cycles.floor())).sin_cos();
    Complex64::new(cos, sin)
}

/// Path lengths and reflection coefficient for one TX/RX height pair.
struct RayPair {
    direct: f64,
    reflected: f64,
    gamma: Complex64,
}

impl RayPair {
    fn new(distance: f64, tx_height: f64, rx_height: f64, eps_r: f64) -> Result<Self> {
        let sum = tx_height + rx_height;
        Ok(Self {
            direct: distance.hypot(tx_height - rx_height),
            reflected: distance.hypot(sum),
            gamma: fresnel_reflection(sum.atan2(distance), eps_r)?,
        })
    }

    fn gain(&self, amplitude: f64, direct: Complex64, reflected: Complex64) -> Complex64 {
        amplitude * (direct / self.direct + self.gamma * reflected / self.reflected)
    }
}

/// Complex baseband gain of the two-ray channel at `subcarrier_freq` for
/// one receive antenna.
pub fn two_path_gain(
    geom: &LinkGeometry,
    radio: &RadioConfig,
    subcarrier_freq: f64,
    rx_branch: RxBranch,
) -> Result<Complex64> {
    geom.validate()?;
    let rays = RayPair::new(
        geom.distance,
        geom.tx_height,
        geom.rx_height(rx_branch),
        radio.ground_rel_permittivity,
    )?;
    Ok(rays.gain(
        radio.amplitude_factor(),
        propagation_phasor(subcarrier_freq, rays.direct),
        propagation_phasor(subcarrier_freq, rays.reflected),
    ))
}

/// Per-subcarrier gains of both receive branches for one set of antenna
/// heights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub low: Vec<Complex64>,
    pub high: Vec<Complex64>,
    pub tx_height: f64,
    pub rx_height_low: f64,
    pub rx_height_high: f64,
}

impl ChannelRealization {
    fn with_capacity(n: usize) -> Self {
        Self {
            low: vec![Complex64::new(0.0, 0.0); n],
            high: vec![Complex64::new(0.0, 0.0); n],
            tx_height: 0.0,
            rx_height_low: 0.0,
            rx_height_high: 0.0,
        }
    }

    pub fn branch(&self, branch: RxBranch) -> &[Complex64] {
        match branch {
            RxBranch::Low => &self.low,
            RxBranch::High => &self.high,
        }
    }

    /// Overwrites this realization in place.
    fn fill(&mut self, geom: &LinkGeometry, radio: &RadioConfig, draws: [f64; 2]) -> Result<()> {
        let sigma = radio.fluctuation_sigma;
        self.tx_height = (geom.tx_height + sigma * draws[0]).max(MIN_ANTENNA_HEIGHT);
        self.rx_height_low = (geom.rx_height_low + sigma * draws[1]).max(MIN_ANTENNA_HEIGHT);
        self.rx_height_high = (geom.rx_height_high + sigma * draws[1]).max(MIN_ANTENNA_HEIGHT);
        let n = radio.n_subcarriers;
        self.low.resize(n, Complex64::new(0.0, 0.0));
        self.high.resize(n, Complex64::new(0.0, 0.0));
        let eps = radio.ground_rel_permittivity;
        let low = RayPair::new(geom.distance, self.tx_height, self.rx_height_low, eps)?;
        let high = RayPair::new(geom.distance, self.tx_height, self.rx_height_high, eps)?;
        fill_branch(&mut self.low, &low, radio);
        fill_branch(&mut self.high, &high, radio);
        Ok(())
    }
}

/// Subcarriers between exact phasor evaluations; in between the phasors
/// advance by a fixed rotation.
const PHASOR_REANCHOR: usize = 64;

fn fill_branch(out: &mut [Complex64], rays: &RayPair, radio: &RadioConfig) {
    let amplitude = radio.amplitude_factor();
    let (f0, step) = radio.subcarrier_grid();
    let step_direct = propagation_phasor(step, rays.direct);
    let step_reflected = propagation_phasor(step, rays.reflected);
    let mut direct = Complex64::new(1.0, 0.0);
    let mut reflected = Complex64::new(1.0, 0.0);
    for (k, h) in out.iter_mut().enumerate() {
        if k % PHASOR_REANCHOR == 0 {
            let f = f0 + k as f64 * step;
            direct = propagation_phasor(f, rays.direct);
            reflected = propagation_phasor(f, rays.reflected);
        } else {
            direct *= step_direct;
            reflected *= step_reflected;
        }
        *h = rays.gain(amplitude, direct, reflected);
    }
}

/// One channel realization. `rng_draws` are two standard normal values:
/// the first jitters the transmitter, the second moves the whole receive
/// mast (both antennas together).
pub fn realize_channel(
    geom: &LinkGeometry,
    radio: &RadioConfig,
    rng_draws: [f64; 2],
) -> Result<ChannelRealization> {
    geom.validate()?;
    radio.validate()?;
    let mut real = ChannelRealization::with_capacity(radio.n_subcarriers);
    real.fill(geom, radio, rng_draws)?;
    Ok(real)
}

/// Shannon capacity of one branch summed over subcarriers, bit/s.
pub fn branch_capacity(gains: &[Complex64], radio: &RadioConfig) -> f64 {
    let sub_bw = radio.subcarrier_bandwidth();
    let snr_scale = radio.tx_power / radio.n_subcarriers as f64 / radio.noise_power_per_subcarrier();
    gains
        .iter()
        .map(|h| sub_bw * (snr_scale * h.norm_sqr()).ln_1p() / std::f64::consts::LN_2)
        .sum()
}

/// Capacity after receive combining, bit/s.
pub fn capacity(real: &ChannelRealization, radio: &RadioConfig, diversity: Diversity) -> f64 {
    let low = branch_capacity(&real.low, radio);
    match diversity {
        Diversity::LowOnly => low,
        Diversity::Selection => low.max(branch_capacity(&real.high, radio)),
    }
}

/// Capacity of the unperturbed channel.
pub fn deterministic_capacity(
    geom: &LinkGeometry,
    radio: &RadioConfig,
    diversity: Diversity,
) -> Result<f64> {
    Ok(capacity(&realize_channel(geom, radio, [0.0, 0.0])?, radio, diversity))
}

/// Monte Carlo settings for an outage-rate estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageSpec {
    pub outage_prob: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// Skip the minimum-sample-count guard.
    pub force: bool,
}

impl Default for OutageSpec {
    fn default() -> Self {
        Self {
            outage_prob: 1e-4,
            n_samples: 1_000_000,
            seed: 0,
            force: false,
        }
    }
}

impl OutageSpec {
    /// Fewest samples that leave ten expected outages in the tail.
    pub fn min_samples(outage_prob: f64) -> u64 {
        (10.0 / outage_prob).ceil() as u64
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.outage_prob > 0.0 && self.outage_prob < 1.0,
            "outage_prob",
            || format!("must lie in (0, 1), got {}", self.outage_prob),
        )?;
        ensure(self.n_samples >= 1, "n_samples", || "must be >= 1".into())?;
        let min = Self::min_samples(self.outage_prob);
        if !self.force && self.n_samples < min {
            return Err(Error::Estimability(format!(
                "n_samples = {} is below {} needed for outage_prob = {}; set force to override",
                self.n_samples, min, self.outage_prob
            )));
        }
        Ok(())
    }
}

/// 1-based rank `k = max(1, ceil(p n))` of the order statistic used as the
/// outage rate.
pub fn outage_rank(outage_prob: f64, n: usize) -> usize {
    ((outage_prob * n as f64).ceil() as usize).clamp(1, n.max(1))
}

/// k-th smallest sample with `k = outage_rank(p, n)`. Reorders `samples`.
pub fn lower_quantile(samples: &mut [f64], outage_prob: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("samples", "no capacity samples"));
    }
    let k = outage_rank(outage_prob, samples.len());
    let (_, kth, _) = samples.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Per-branch capacities of every Monte Carlo realization.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySamples {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl CapacitySamples {
    pub fn len(&self) -> usize {
        self.low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low.is_empty()
    }

    pub fn combined(&self, diversity: Diversity) -> Vec<f64> {
        match diversity {
            Diversity::LowOnly => self.low.clone(),
            Diversity::Selection => self
                .low
                .iter()
                .zip(&self.high)
                .map(|(l, h)| l.max(*h))
                .collect(),
        }
    }

    pub fn outage_rate(&self, outage_prob: f64, diversity: Diversity) -> Result<f64> {
        lower_quantile(&mut self.combined(diversity), outage_prob)
    }
}

/// Standard normal draws of sample `index` in the stream keyed by `key`.
fn sample_draws(base: &ChaCha8Rng, index: u64) -> [f64; 2] {
    let mut rng = base.clone();
    rng.set_stream(index);
    [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]
}

/// Runs the Monte Carlo at one link geometry. Sample `i` always uses
/// stream `i` of a generator keyed by `(spec.seed, stream)`, so the result
/// depends neither on thread count nor on scheduling.
pub fn capacity_samples(
    geom: &LinkGeometry,
    radio: &RadioConfig,
    spec: &OutageSpec,
    stream: u64,
) -> Result<CapacitySamples> {
    geom.validate()?;
    radio.validate()?;
    spec.validate()?;
    let base = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[stream]));
    let pairs = (0..spec.n_samples)
        .into_par_iter()
        .map_init(
            || ChannelRealization::with_capacity(radio.n_subcarriers),
            |real, i| {
                real.fill(geom, radio, sample_draws(&base, i))?;
                Ok((branch_capacity(&real.low, radio), branch_capacity(&real.high, radio)))
            },
        )
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (low, high) = pairs.into_iter().unzip();
    Ok(CapacitySamples { low, high })
}

/// Rate achieved with probability `1 - outage_prob` at one geometry.
pub fn outage_rate(
    geom: &LinkGeometry,
    radio: &RadioConfig,
    spec: &OutageSpec,
    diversity: Diversity,
) -> Result<f64> {
    capacity_samples(geom, radio, spec, 0)?.outage_rate(spec.outage_prob, diversity)
}

/// Outage rate over an ascending grid of link distances. Grid point `i`
/// uses stream `i`.
pub fn outage_curve(
    d_grid: &[f64],
    heights: &AntennaHeights,
    radio: &RadioConfig,
    spec: &OutageSpec,
    diversity: Diversity,
) -> Result<RateCurve> {
    check_grid("d_grid", d_grid)?;
    let points = d_grid
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let geom = LinkGeometry::new(d, heights, radio)?;
            let rate = capacity_samples(&geom, radio, spec, i as u64)?
                .outage_rate(spec.outage_prob, diversity)?;
            Ok(CurvePoint {
                x: d,
                rate: RateValue::Finite(rate),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RateCurve::new(Axis::LinkDistanceM, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn geom60(d: f64) -> (LinkGeometry, RadioConfig) {
        let radio = RadioConfig::preset(Band::Ghz60);
        (LinkGeometry::new(d, &AntennaHeights::default(), &radio).unwrap(), radio)
    }

    #[test]
    fn presets_match_table() {
        let r5 = RadioConfig::preset(Band::Ghz5);
        let r30 = RadioConfig::preset(Band::Ghz30);
        let r60 = RadioConfig::preset(Band::Ghz60);
        assert_eq!((r5.tx_gain, r5.rx_antenna_spacing, r5.bandwidth), (4.3, 1.2, 10e6));
        assert_eq!((r30.tx_gain, r30.rx_antenna_spacing, r30.bandwidth), (20.0, 0.2, 500e6));
        assert_eq!((r60.tx_gain, r60.rx_antenna_spacing, r60.bandwidth), (26.0, 0.1, 1e9));
        for r in [r5, r30, r60] {
            assert_eq!(r.tx_power, 0.010);
            assert_eq!(r.n_subcarriers, 512);
            assert_eq!(r.fluctuation_sigma, 0.032);
            assert_eq!(r.tx_gain, r.rx_gain);
            r.validate().unwrap();
        }
    }

    #[test]
    fn preset_gains_consistent_with_aperture() {
        // 2.5 cm x 2.5 cm aperture: G = 4π A / λ²
        for (band, expected) in [(Band::Ghz5, 3.4), (Band::Ghz30, 19.0), (Band::Ghz60, 25.0)] {
            let r = RadioConfig::preset(band);
            let g = linear_to_db(4.0 * PI * 0.025f64.powi(2) / r.wavelength().powi(2));
            assert!((g - expected).abs() < 0.1, "{band}: {g}");
            assert!((g - r.tx_gain).abs() < 1.5, "{band}: {g} vs {}", r.tx_gain);
        }
    }

    #[test]
    fn band_names_round_trip() {
        for b in Band::ALL {
            assert_eq!(b.name().parse::<Band>().unwrap(), b);
        }
        assert!("6ghz".parse::<Band>().is_err());
    }

    #[test]
    fn fresnel_limits() {
        for eps in [1.5, 5.0, 15.0] {
            let g = fresnel_reflection(1e-9, eps).unwrap();
            assert!((g.re + 1.0).abs() < 1e-6, "{g}");
        }
        for psi in [0.01, 0.3, 1.0, PI / 2.0] {
            assert!(fresnel_reflection(psi, 1.0).unwrap().norm() < 1e-15);
        }
        let normal = fresnel_reflection(PI / 2.0, 5.0).unwrap();
        let expected = (5.0 - 5f64.sqrt()) / (5.0 + 5f64.sqrt());
        assert!((normal.re - expected).abs() < 1e-12);
        assert!((normal.re - 0.38197).abs() < 1e-5);
    }

    #[test]
    fn fresnel_rejects_bad_inputs() {
        assert!(fresnel_reflection(0.0, 5.0).is_err());
        assert!(fresnel_reflection(2.0, 5.0).is_err());
        assert!(fresnel_reflection(0.1, 0.5).is_err());
    }

    #[test]
    fn single_path_is_friis() {
        let (geom, mut radio) = geom60(25.0);
        radio.ground_rel_permittivity = 1.0;
        let h = two_path_gain(&geom, &radio, 60.2e9, RxBranch::Low).unwrap();
        let r_d = 25f64.hypot(0.2);
        let friis = db_to_linear(52.0).sqrt() * radio.wavelength() / (4.0 * PI * r_d);
        assert_relative_eq!(h.norm(), friis, max_relative = 1e-12);
    }

    #[test]
    fn antiphase_reflection_doubles_amplitude() {
        // h_t = h_r = 1 m at 800 m: path difference 2 h_t h_r / d = λ/2, so
        // a -1 reflection arrives in phase with the direct ray.
        let geom = LinkGeometry {
            distance: 800.0,
            tx_height: 1.0,
            rx_height_low: 1.0,
            rx_height_high: 1.1,
        };
        let radio = RadioConfig::preset(Band::Ghz60);
        let rays = RayPair {
            direct: 800.0,
            reflected: 800f64.hypot(2.0),
            gamma: Complex64::new(-1.0, 0.0),
        };
        let f = 60e9;
        let h = rays.gain(
            radio.amplitude_factor(),
            propagation_phasor(f, rays.direct),
            propagation_phasor(f, rays.reflected),
        );
        let friis = radio.amplitude_factor() / 800.0;
        assert!((h.norm() / friis - 2.0).abs() < 0.01, "{}", h.norm() / friis);
        // the coefficient from the Fresnel model is close to -1 at this angle
        let h_model = two_path_gain(&geom, &radio, f, RxBranch::Low).unwrap();
        assert!(h_model.norm() / friis > 1.9);
    }

    #[test]
    fn gain_decays_at_long_range() {
        let radio = RadioConfig::preset(Band::Ghz60);
        let heights = AntennaHeights::default();
        // last null at 2 h_t h_r / d = λ/2 is below 300 m for these heights
        let mut prev = f64::INFINITY;
        let mut first = None;
        for d in (300..=3000).step_by(100) {
            let geom = LinkGeometry::new(d as f64, &heights, &radio).unwrap();
            let g = two_path_gain(&geom, &radio, 60e9, RxBranch::Low).unwrap().norm();
            assert!(g < prev, "d = {d}");
            first.get_or_insert(g);
            prev = g;
        }
        assert!(prev < first.unwrap() / 50.0);
    }

    #[test]
    fn realization_matches_pointwise_gain() {
        let (geom, radio) = geom60(37.0);
        let real = realize_channel(&geom, &radio, [0.0, 0.0]).unwrap();
        assert_eq!(real.low.len(), radio.n_subcarriers);
        for k in [0, 1, 63, 64, 200, 511] {
            let f = radio.subcarrier_freq(k);
            for (branch, gains) in [(RxBranch::Low, &real.low), (RxBranch::High, &real.high)] {
                let h = two_path_gain(&geom, &radio, f, branch).unwrap();
                assert!((gains[k] - h).norm() <= 1e-10 * h.norm(), "k = {k}");
            }
        }
        assert_eq!(radio.subcarrier_freq(511), 60.5e9);
        assert_eq!(radio.subcarrier_freq(0), 59.5e9);
    }

    #[test]
    fn zero_sigma_or_zero_draws_are_deterministic() {
        let (geom, radio) = geom60(10.0);
        let base = realize_channel(&geom, &radio, [0.0, 0.0]).unwrap();
        let quiet = RadioConfig {
            fluctuation_sigma: 0.0,
            ..radio
        };
        assert_eq!(realize_channel(&geom, &quiet, [1.3, -0.7]).unwrap(), base);
        assert_eq!(base.tx_height, geom.tx_height);
        let moved = realize_channel(&geom, &radio, [1.0, 1.0]).unwrap();
        assert!((moved.rx_height_high - moved.rx_height_low - 0.1).abs() < 1e-12);
        assert_ne!(moved, base);
    }

    #[test]
    fn heights_are_clamped() {
        let (geom, radio) = geom60(10.0);
        let real = realize_channel(&geom, &radio, [-100.0, -100.0]).unwrap();
        assert_eq!(real.tx_height, MIN_ANTENNA_HEIGHT);
        assert_eq!(real.rx_height_low, MIN_ANTENNA_HEIGHT);
        assert!(real.low.iter().all(|h| h.norm().is_finite()));
    }

    #[test]
    fn single_carrier_link_budget() {
        let geom = LinkGeometry {
            distance: 10.0,
            tx_height: 0.5,
            rx_height_low: 0.5,
            rx_height_high: 0.6,
        };
        let radio = RadioConfig {
            n_subcarriers: 1,
            fluctuation_sigma: 0.0,
            ground_rel_permittivity: 1.0,
            ..RadioConfig::preset(Band::Ghz60)
        };
        let real = realize_channel(&geom, &radio, [0.0, 0.0]).unwrap();
        let p_rx_dbm = linear_to_db(radio.tx_power * real.low[0].norm_sqr() * 1e3);
        // 10 dBm + 52 dB - 20 log10(4π 10 / 0.005)
        let expected = 10.0 + 52.0 - 20.0 * (4.0 * PI * 10.0 / 0.005f64).log10();
        assert!((p_rx_dbm - expected).abs() < 1e-9, "{p_rx_dbm}");
        assert!((p_rx_dbm + 26.0).abs() < 0.01);
    }

    #[test]
    fn capacity_special_cases() {
        let radio = RadioConfig {
            bandwidth: 1e9,
            ..RadioConfig::preset(Band::Ghz60)
        };
        let zero = ChannelRealization::with_capacity(radio.n_subcarriers);
        assert_eq!(capacity(&zero, &radio, Diversity::Selection), 0.0);

        // |H|² giving per-subcarrier SNR of exactly 1
        for n in [1usize, 7, 512] {
            let radio = RadioConfig {
                n_subcarriers: n,
                ..radio
            };
            let unit = (radio.noise_power_per_subcarrier() * n as f64 / radio.tx_power).sqrt();
            let mut real = ChannelRealization::with_capacity(n);
            real.low.fill(Complex64::new(unit, 0.0));
            let c = capacity(&real, &radio, Diversity::LowOnly);
            assert_relative_eq!(c, 1e9, max_relative = 1e-12);
        }
    }

    #[test]
    fn flat_high_snr_capacity() {
        let radio = RadioConfig::preset(Band::Ghz60);
        let n = radio.n_subcarriers;
        let amp = (db_to_linear(48.0) * radio.noise_power_per_subcarrier() * n as f64
            / radio.tx_power)
            .sqrt();
        let mut real = ChannelRealization::with_capacity(n);
        real.low.fill(Complex64::new(amp, 0.0));
        real.high.fill(Complex64::new(amp, 0.0));
        let c = capacity(&real, &radio, Diversity::Selection);
        assert_relative_eq!(c, 1e9 * (1.0 + db_to_linear(48.0)).log2(), max_relative = 1e-12);
        assert!((c / 1e9 - 15.95).abs() < 0.01);
    }

    #[test]
    fn rank_and_quantile_rule() {
        assert_eq!(outage_rank(1e-4, 1_000_000), 100);
        assert_eq!(outage_rank(1e-4, 10), 1);
        assert_eq!(outage_rank(0.2, 10), 2);
        let mut caps: Vec<f64> = (1..=10).rev().map(|g| g as f64 * 1e9).collect();
        assert_eq!(lower_quantile(&mut caps, 0.2).unwrap(), 2e9);
        assert!(lower_quantile(&mut [], 0.2).is_err());
    }

    #[test]
    fn estimability_guard() {
        let spec = OutageSpec {
            n_samples: 99_999,
            ..Default::default()
        };
        assert!(matches!(spec.validate(), Err(Error::Estimability(_))));
        assert!(OutageSpec { force: true, ..spec }.validate().is_ok());
        assert!(OutageSpec {
            n_samples: 100_000,
            ..spec
        }
        .validate()
        .is_ok());
        assert!(OutageSpec {
            outage_prob: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    fn small_spec(seed: u64) -> OutageSpec {
        OutageSpec {
            outage_prob: 1e-2,
            n_samples: 2_000,
            seed,
            force: false,
        }
    }

    #[test]
    fn zero_sigma_outage_equals_deterministic() {
        let (geom, radio) = geom60(10.0);
        let radio = RadioConfig {
            fluctuation_sigma: 0.0,
            ..radio
        };
        for div in [Diversity::Selection, Diversity::LowOnly] {
            let det = deterministic_capacity(&geom, &radio, div).unwrap();
            assert_eq!(outage_rate(&geom, &radio, &small_spec(3), div).unwrap(), det);
        }
    }

    #[test]
    fn selection_dominates_each_branch() {
        let (geom, radio) = geom60(10.0);
        let s = capacity_samples(&geom, &radio, &small_spec(11), 0).unwrap();
        let sel = s.combined(Diversity::Selection);
        for i in 0..s.len() {
            assert!(sel[i] >= s.low[i] && sel[i] >= s.high[i]);
        }
        let spec = small_spec(11);
        let with = outage_rate(&geom, &radio, &spec, Diversity::Selection).unwrap();
        let without = outage_rate(&geom, &radio, &spec, Diversity::LowOnly).unwrap();
        assert!(with > without, "{with} vs {without}");
    }

    #[test]
    fn same_seed_same_samples() {
        let (geom, radio) = geom60(20.0);
        let a = capacity_samples(&geom, &radio, &small_spec(5), 2).unwrap();
        let b = capacity_samples(&geom, &radio, &small_spec(5), 2).unwrap();
        assert_eq!(a, b);
        let c = capacity_samples(&geom, &radio, &small_spec(6), 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn thread_count_does_not_change_samples() {
        let (geom, radio) = geom60(15.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| capacity_samples(&geom, &radio, &small_spec(9), 0).unwrap())
        };
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn curve_single_point_matches_outage_rate() {
        let (geom, radio) = geom60(12.0);
        let spec = small_spec(4);
        let c = outage_curve(&[12.0], &AntennaHeights::default(), &radio, &spec, Diversity::Selection)
            .unwrap();
        let r = outage_rate(&geom, &radio, &spec, Diversity::Selection).unwrap();
        assert_eq!(c.points()[0].rate, RateValue::Finite(r));
        assert!(outage_curve(&[], &AntennaHeights::default(), &radio, &spec, Diversity::Selection)
            .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn quantile_monotone_in_outage_prob(
            mut caps in prop::collection::vec(0.0f64..1e10, 1..200),
            p in 1e-3f64..0.5, dp in 0.0f64..0.4,
        ) {
            let lo = lower_quantile(&mut caps.clone(), p).unwrap();
            let hi = lower_quantile(&mut caps, (p + dp).min(0.999)).unwrap();
            prop_assert!(hi >= lo);
        }

        #[test]
        fn friis_degeneration_capacity(d in 1.0f64..200.0, n in 1usize..16) {
            let radio = RadioConfig {
                n_subcarriers: n,
                fluctuation_sigma: 0.0,
                ground_rel_permittivity: 1.0,
                ..RadioConfig::preset(Band::Ghz30)
            };
            let geom = LinkGeometry::new(d, &AntennaHeights::default(), &radio).unwrap();
            let c = deterministic_capacity(&geom, &radio, Diversity::LowOnly).unwrap();
            let r_d = d.hypot(0.2);
            let p_rx = radio.tx_power * db_to_linear(40.0) * (radio.wavelength() / (4.0 * PI * r_d)).powi(2);
            let snr = p_rx / (BOLTZMANN * 290.0 * radio.bandwidth * 10.0);
            let closed = radio.bandwidth * (1.0 + snr).log2();
            prop_assert!((c - closed).abs() <= 1e-9 * closed);
        }
    }
}
