//! The four batch commands. Each computes every output in memory first and
//! returns an [`OutputSet`]; the caller writes it.

use std::fmt::Write as _;

use anyhow::{Context, Result};
use clap::ValueEnum;
use mmv2x_core::beamtraining::{
    beam_footprint, boresight_for_far_edge, bft_duration, connection_time, tracking_feasibility,
};
use mmv2x_core::channel::{capacity_samples, Diversity, LinkGeometry, OutageSpec};
use mmv2x_core::feasibility::{compare_bands, RateValue};
use mmv2x_core::perception::{PerceptionMode, VelocityCeiling};
use mmv2x_core::seed;

use crate::config::RunConfig;
use crate::output::{csv_body, header, length, rate, sig, OutputSet};
use crate::sweep::SweepVariable;

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    RequiredRate,
    OutageRate,
    MaxVelocity,
    BeamAnalysis,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::RequiredRate => "required-rate",
            Command::OutageRate => "outage-rate",
            Command::MaxVelocity => "max-velocity",
            Command::BeamAnalysis => "beam-analysis",
        }
    }
}

/// Runs `command` and returns its files, including the resolved config.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<OutputSet> {
    let mut out = OutputSet::new();
    match command {
        Command::RequiredRate => required_rate(cfg, &mut out),
        Command::OutageRate => outage_rate(cfg, &mut out),
        Command::MaxVelocity => max_velocity(cfg, &mut out),
        Command::BeamAnalysis => beam_analysis(cfg, &mut out),
    }
    .with_context(|| format!("{} failed", command.name()))?;
    out.add(
        RESOLVED_CONFIG,
        format!("{}{}", header(command.name(), cfg), cfg.to_toml()),
    );
    Ok(out)
}

fn rate_cell(r: RateValue) -> (String, bool) {
    match r {
        RateValue::Finite(x) => (rate(x), true),
        RateValue::Unreachable => ("inf".into(), false),
        RateValue::Absent => (String::new(), false),
    }
}

const MODES: [PerceptionMode; 2] = [PerceptionMode::EgoOnly, PerceptionMode::Cooperative];

fn required_rate(cfg: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let sweep = &cfg.sweep.required_rate;
    let grid = sweep.grid()?;
    let d_be = sweep.d_be_m.unwrap_or(cfg.scenario.d_be);
    let setup = cfg.perception().with_d_be(d_be);
    let curves = MODES
        .iter()
        .map(|&mode| match sweep.variable {
            SweepVariable::Velocity => setup.required_rate_curve(&grid, mode),
            SweepVariable::InterVehicleDistance => {
                setup.required_rate_vs_distance(sweep.v_kmh, &grid, mode)
            }
        })
        .collect::<mmv2x_core::Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(2 * grid.len());
    for (i, &x) in grid.iter().enumerate() {
        let (v, d) = match sweep.variable {
            SweepVariable::Velocity => (x, d_be),
            SweepVariable::InterVehicleDistance => (sweep.v_kmh, x),
        };
        for (mode, curve) in MODES.iter().zip(&curves) {
            let (r, reachable) = rate_cell(curve.points()[i].rate);
            rows.push(vec![
                length(v),
                length(d),
                mode.label().to_owned(),
                r,
                reachable.to_string(),
            ]);
        }
    }
    let body = csv_body(&["v_kmh", "d_be_m", "mode", "rate_bps", "reachable"], rows);
    out.add(
        "required_rate.csv",
        format!("{}{body}", header(Command::RequiredRate.name(), cfg)),
    );
    Ok(())
}

fn outage_rate(cfg: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let grid = cfg.sweep.outage_rate.grid()?;
    let base = cfg.outage_spec();
    let mut rows = Vec::new();
    for (_, radio) in cfg.radio.resolved_bands() {
        let spec = OutageSpec {
            seed: seed::derive_tagged(cfg.seed, "outage-rate", &[radio.carrier_freq.to_bits()]),
            ..base
        };
        for (i, &d) in grid.iter().enumerate() {
            let geom = LinkGeometry::new(d, &cfg.antennas, &radio)?;
            let samples = capacity_samples(&geom, &radio, &spec, i as u64)?;
            for diversity in [Diversity::Selection, Diversity::LowOnly] {
                let r = samples.outage_rate(spec.outage_prob, diversity)?;
                rows.push(vec![
                    length(d),
                    length(radio.carrier_freq / 1e9),
                    diversity.enabled().to_string(),
                    sig(spec.outage_prob, 6),
                    rate(r),
                    spec.n_samples.to_string(),
                    spec.seed.to_string(),
                ]);
            }
        }
    }
    let body = csv_body(
        &["d_m", "freq_ghz", "diversity", "outage_prob", "rate_bps", "n_samples", "seed"],
        rows,
    );
    out.add(
        "outage_rate.csv",
        format!("{}{body}", header(Command::OutageRate.name(), cfg)),
    );
    Ok(())
}

fn ceiling_text(c: VelocityCeiling) -> String {
    match c {
        VelocityCeiling::Finite(v) => format!("{} km/h", length(v)),
        VelocityCeiling::Unbounded => "none".into(),
    }
}

fn max_velocity(cfg: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let spec = OutageSpec {
        seed: seed::derive_tagged(cfg.seed, "max-velocity", &[]),
        ..cfg.outage_spec()
    };
    let settings = cfg.solver_settings();
    let report = compare_bands(
        &cfg.perception(),
        &cfg.radio.resolved_bands(),
        &cfg.antennas,
        &spec,
        &settings,
    )?;
    let head = header(Command::MaxVelocity.name(), cfg);

    let rows = report.entries.iter().map(|e| {
        vec![
            e.label.clone(),
            length(e.v_max),
            e.binding.label().to_owned(),
            rate(e.outage_rate),
            e.seed.to_string(),
        ]
    });
    let body = csv_body(&["band", "v_max_kmh", "binding", "outage_rate_bps", "seed"], rows);
    out.add("max_velocity.csv", format!("{head}{body}"));

    let mut curve_rows = Vec::new();
    for e in &report.entries {
        for (req, ach) in e.required.points().iter().zip(e.achieved.points()) {
            curve_rows.push(vec![
                e.label.clone(),
                length(req.x),
                rate_cell(req.rate).0,
                rate_cell(ach.rate).0,
            ]);
        }
    }
    let body = csv_body(
        &["band", "v_kmh", "required_rate_bps", "achieved_rate_bps"],
        curve_rows,
    );
    out.add("max_velocity_curves.csv", format!("{head}{body}"));

    let mut by_freq: Vec<_> = report.entries.iter().collect();
    by_freq.sort_by(|a, b| a.carrier_freq.total_cmp(&b.carrier_freq));
    let ordered = by_freq.windows(2).all(|w| w[1].v_max > w[0].v_max);

    let mut txt = head;
    writeln!(
        txt,
        "\nMaximum safe velocity at d_be = {} m\noutage probability {}, {} samples, antenna selection diversity {}\n",
        length(report.d_be),
        sig(spec.outage_prob, 6),
        spec.n_samples,
        if settings.diversity.enabled() { "on" } else { "off" },
    )?;
    writeln!(
        txt,
        "{:<8} {:>10} {:>16} {:>20} {:>9}",
        "band", "v_max_kmh", "outage_Gbit/s", "binding", "verified"
    )?;
    for e in &report.entries {
        writeln!(
            txt,
            "{:<8} {:>10} {:>16} {:>20} {:>9}",
            e.label,
            length(e.v_max),
            sig(e.outage_rate / 1e9, 6),
            e.binding.label(),
            if e.verified { "yes" } else { "NO" }
        )?;
    }
    let ego = report
        .entries
        .first()
        .map(|e| e.ego_ceiling)
        .unwrap_or(VelocityCeiling::Unbounded);
    writeln!(txt, "\nego-only visibility ceiling: {}", ceiling_text(ego))?;
    writeln!(
        txt,
        "v_max strictly increasing with carrier frequency: {}",
        if ordered { "yes" } else { "no" }
    )?;
    writeln!(txt, "bisection tolerance: {} km/h", sig(report.tolerance, 4))?;
    out.add("report.txt", txt);
    Ok(())
}

fn beam_analysis(cfg: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let sweep = &cfg.sweep.beam_analysis;
    let geom = &cfg.beam;
    let v = sweep.v_kmh;

    // The sweep plus the two anchor beams: far edge at the maximum range,
    // and the steepest beam whose near edge is still short of vertical.
    let mut angles = sweep.grid()?;
    angles.push(boresight_for_far_edge(geom, geom.max_range)?.to_degrees());
    angles.push(geom.boresight_range().1.to_degrees());
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut rows = Vec::with_capacity(angles.len());
    let mut table = String::new();
    writeln!(
        table,
        "{:>13} {:>10} {:>10} {:>10} {:>10}",
        "boresight_deg", "d_near_m", "d_far_m", "length_m", "dwell_ms"
    )?;
    for &deg in &angles {
        let fp = beam_footprint(geom, deg.to_radians())?;
        let dwell_ms = connection_time(fp.length, v)? * 1e3;
        let row = [
            sig(deg, 6),
            length(fp.d_near),
            length(fp.d_far),
            length(fp.length),
            length(dwell_ms),
        ];
        writeln!(
            table,
            "{:>13} {:>10} {:>10} {:>10} {:>10}",
            row[0], row[1], row[2], row[3], row[4]
        )?;
        rows.push(row.to_vec());
    }
    let head = header(Command::BeamAnalysis.name(), cfg);
    let body = csv_body(
        &["boresight_deg", "d_near_m", "d_far_m", "length_m", "dwell_ms_at_v"],
        rows,
    );
    out.add("beam_analysis.csv", format!("{head}# v_kmh: {}\n{body}", length(v)));

    let verdict = tracking_feasibility(geom, &cfg.bft, v)?;
    let mut txt = head;
    writeln!(
        txt,
        "\nRSU beam footprint, RSU {} m, OBU {} m, HPBW {} deg, range {} m, vehicle at {} km/h\n",
        length(geom.rsu_height),
        length(geom.obu_height),
        length(geom.hpbw.to_degrees()),
        length(geom.max_range),
        length(v)
    )?;
    txt.push_str(&table);
    writeln!(
        txt,
        "\nbeamforming training: {} sector sweep frames, {} us per training",
        cfg.bft.n_ssw,
        length(bft_duration(&cfg.bft) * 1e6)
    )?;
    writeln!(
        txt,
        "training period: {} ms ({} per beacon interval)",
        length(verdict.bft_period * 1e3),
        cfg.bft.bft_per_bi
    )?;
    writeln!(
        txt,
        "shortest footprint: {} m at {} deg, dwell {} ms",
        length(verdict.worst_footprint),
        sig(verdict.worst_boresight.to_degrees(), 6),
        length(verdict.worst_dwell * 1e3)
    )?;
    writeln!(
        txt,
        "tracking at {} km/h: {}",
        length(v),
        if verdict.feasible { "feasible" } else { "infeasible" }
    )?;
    out.add("report.txt", txt);
    Ok(())
}
