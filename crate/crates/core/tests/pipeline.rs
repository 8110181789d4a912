//! End-to-end checks across modules: requirement, channel and solver
//! agree with each other.

use mmv2x_core::channel::{
    capacity_samples, outage_curve, AntennaHeights, Band, Diversity, LinkGeometry, OutageSpec,
    RadioConfig,
};
use mmv2x_core::feasibility::{compare_bands, Binding, RateValue, SolverSettings};
use mmv2x_core::perception::{PerceptionMode, PerceptionSetup};

fn quick_spec(seed: u64) -> OutageSpec {
    OutageSpec {
        outage_prob: 1e-2,
        n_samples: 2_000,
        seed,
        force: false,
    }
}

fn bands() -> Vec<(String, RadioConfig)> {
    Band::ALL
        .iter()
        .map(|&b| (b.name().to_owned(), RadioConfig::preset(b)))
        .collect()
}

#[test]
fn solution_brackets_the_crossing() {
    let setup = PerceptionSetup::default();
    let settings = SolverSettings::default();
    let report = compare_bands(&setup, &bands(), &AntennaHeights::default(), &quick_spec(1), &settings)
        .unwrap();
    assert!(report.strictly_increasing());
    for e in &report.entries {
        assert_eq!(e.binding, Binding::LinkRate, "{}", e.label);
        let below = setup.required_data_rate(e.v_max).unwrap();
        let above = setup.required_data_rate(e.v_max + 2.0 * settings.tolerance).unwrap();
        assert!(below <= e.outage_rate && above > e.outage_rate, "{}", e.label);
        let last = e.achieved.points().last().unwrap();
        assert_eq!(last.rate, RateValue::Finite(e.outage_rate));
        assert_eq!(e.required.len(), e.achieved.len());
    }
}

#[test]
fn band_result_independent_of_companions() {
    let setup = PerceptionSetup::default();
    let settings = SolverSettings::default();
    let heights = AntennaHeights::default();
    let all = compare_bands(&setup, &bands(), &heights, &quick_spec(3), &settings).unwrap();
    let alone = compare_bands(&setup, &bands()[1..2], &heights, &quick_spec(3), &settings).unwrap();
    assert_eq!(alone.entries[0], all.entries[1]);
}

#[test]
fn curve_is_thread_count_independent() {
    let radio = RadioConfig::preset(Band::Ghz30);
    let heights = AntennaHeights::default();
    let grid = [5.0, 10.0, 25.0];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| outage_curve(&grid, &heights, &radio, &quick_spec(9), Diversity::Selection).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn outage_rate_falls_with_stricter_probability() {
    let radio = RadioConfig::preset(Band::Ghz60);
    let geom = LinkGeometry::new(20.0, &AntennaHeights::default(), &radio).unwrap();
    let s = capacity_samples(&geom, &radio, &quick_spec(4), 0).unwrap();
    let loose = s.outage_rate(0.1, Diversity::Selection).unwrap();
    let strict = s.outage_rate(1e-2, Diversity::Selection).unwrap();
    assert!(strict <= loose);
}

#[test]
fn cooperation_outranges_ego_sensor() {
    let setup = PerceptionSetup::default();
    let ceiling = setup.ego_visibility_ceiling().as_f64();
    let above = ceiling + 5.0;
    assert_eq!(setup.rate_value(above, PerceptionMode::EgoOnly).unwrap(), RateValue::Unreachable);
    assert!(setup.rate_value(above, PerceptionMode::Cooperative).unwrap().is_reachable());
}
