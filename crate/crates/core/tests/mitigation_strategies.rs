//! End-to-end behavior of the swarm mitigation strategies.

use acouswarm_core::mitigation::{
    avoid_path_profile, baseline_profile, capped_profile, dual_frequency_profile,
    synchronized_burst_power, uniform_reference_profile,
};
use acouswarm_core::scenario::{
    FrequencyBand, Scenario, SwarmScenario, TissuePath,
};
use acouswarm_core::swarm::DensityProfile;

fn swarm_scenario(robot_count: f64) -> Scenario {
    let mut s = Scenario::table();
    s.swarm = SwarmScenario::uniform(robot_count);
    s
}

#[test]
fn power_cap_leaves_more_power_at_depth() {
    // a million million robots at 1 MHz starve the deep tissue; capping
    // each robot at 100 pW moves power inward
    let s = swarm_scenario(1e12);
    let uncapped = baseline_profile(&s, 1000e3).unwrap();
    let capped = capped_profile(&s, 1000e3, 100e-12).unwrap();

    let deep_uncapped = uncapped.power_at(0.10);
    let deep_capped = capped.power_at(0.10);
    assert!(
        deep_capped > deep_uncapped,
        "capped {deep_capped:.3e} W vs uncapped {deep_uncapped:.3e} W at 10 cm"
    );
    // near the skin the cap binds: collected power equals the cap
    assert!((capped.power_at(0.0) - 100e-12).abs() < 1e-12 * 100e-12);
    assert!(uncapped.power_at(0.0) > 100e-12);
    // a binding cap shrinks the absorption cross section at the skin
    assert!(capped.samples[0].robot_attenuation < uncapped.samples[0].robot_attenuation);
}

#[test]
fn non_binding_cap_is_identical_to_baseline() {
    let s = swarm_scenario(1e11);
    let baseline = baseline_profile(&s, 300e3).unwrap();
    let capped = capped_profile(&s, 300e3, 1.0).unwrap();
    for (a, b) in baseline.samples.iter().zip(&capped.samples) {
        assert_eq!(a.pressure, b.pressure);
        assert_eq!(a.robot_power, b.robot_power);
    }
}

#[test]
fn dual_frequency_crossover_near_eight_centimeters() {
    // 1000 W/m^2 split between 100 kHz at 43 kPa and 300 kHz at 23 kPa,
    // threshold 2.3 pW per robot, 1e12 robots
    let mut s = swarm_scenario(1e12);
    s.source.frequencies = vec![
        FrequencyBand {
            frequency: 100e3,
            share: 0.761,
            pressure: Some(43e3),
        },
        FrequencyBand {
            frequency: 300e3,
            share: 0.218,
            pressure: Some(23e3),
        },
    ];
    let dual = dual_frequency_profile(&s, 100e3, 300e3, (0.761, 0.218), 2.3e-12).unwrap();

    let crossover = dual.crossover_depth.expect("threshold is crossed");
    assert!(
        (crossover - 0.08).abs() <= 0.01,
        "crossover at {crossover:.4} m, expected 8 cm +/- 1 cm"
    );

    // robots at the skin harvest the high frequency
    assert!(dual.chosen_high[0]);
    // the choice switches exactly once
    let switches = dual
        .chosen_high
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count();
    assert_eq!(switches, 1);

    // power is not monotonic in depth: just past the crossover the low
    // frequency delivers far more than the threshold
    let idx = dual
        .chosen_high
        .iter()
        .position(|high| !high)
        .expect("switch exists");
    let before = dual.delivered_power[idx - 1];
    let after = dual.delivered_power[idx];
    assert!(
        after > before,
        "power should jump across the crossover: {before:.3e} -> {after:.3e}"
    );
    assert!(after > 100.0 * 2.3e-12);
}

#[test]
fn single_band_share_reduces_to_plain_profile() {
    let s = swarm_scenario(1e11);
    let dual = dual_frequency_profile(&s, 100e3, 300e3, (1.0, 0.0), 2.3e-12).unwrap();
    // high frequency carries nothing, so robots use the low one from the
    // skin and its field must equal the single-frequency run
    assert!(dual.chosen_high.iter().all(|high| !high));
    assert!(dual.crossover_depth.is_none());
    let plain = baseline_profile(&s, 100e3).unwrap();
    for (a, b) in dual.low.samples.iter().zip(&plain.samples) {
        assert!((a.pressure - b.pressure).abs() <= 1e-9 * b.pressure.max(1e-9));
    }
}

#[test]
fn dual_frequency_budget_is_enforced() {
    let s = swarm_scenario(1e11);
    assert!(dual_frequency_profile(&s, 100e3, 300e3, (0.8, 0.3), 2.3e-12).is_err());
}

#[test]
fn avoiding_the_lung_path_helps_every_lung_depth() {
    let mut s = swarm_scenario(1e12);
    s.path = TissuePath::lung(0.05, 0.10, 0.2);
    let f = 40e3;
    let uniform = uniform_reference_profile(&s, f, (0.0, 0.05)).unwrap();
    let avoided = avoid_path_profile(&s, f, (0.0, 0.05), false).unwrap();
    let mut improved = 0;
    for (u, a) in uniform.samples.iter().zip(&avoided.samples) {
        assert_eq!(u.depth, a.depth);
        if u.depth > 0.05 + 1e-12 {
            assert!(
                a.robot_power > u.robot_power,
                "at {} m avoided {:.3e} vs uniform {:.3e}",
                u.depth,
                a.robot_power,
                u.robot_power
            );
            improved += 1;
        }
    }
    assert!(improved > 50);
}

#[test]
fn empty_avoided_range_changes_nothing() {
    let s = swarm_scenario(1e11);
    let plain = uniform_reference_profile(&s, 100e3, (0.05, 0.05)).unwrap();
    let avoided = avoid_path_profile(&s, 100e3, (0.05, 0.05), false).unwrap();
    for (a, b) in plain.samples.iter().zip(&avoided.samples) {
        assert!((a.pressure - b.pressure).abs() <= 1e-12 * b.pressure);
    }
}

#[test]
fn redistribution_conserves_the_robot_count() {
    let mut swarm = SwarmScenario::uniform(1e12);
    swarm.density_profile = vec![acouswarm_core::scenario::DensitySegment {
        from: 0.10,
        to: 0.20,
        multiplier: 2.0,
    }];
    let original = DensityProfile::from_swarm(&swarm).unwrap();
    let integral = |profile: &DensityProfile| {
        let mut edges = vec![0.0, 0.02, 0.06, 0.10, 0.20];
        for seg in &profile.segments {
            edges.push(seg.from);
            edges.push(seg.to);
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        edges
            .windows(2)
            .map(|w| profile.density_at(0.5 * (w[0] + w[1])) * (w[1] - w[0]))
            .sum::<f64>()
    };

    let redistributed =
        acouswarm_core::mitigation::avoided_density(&original, (0.02, 0.06), true, 0.20)
            .unwrap();
    assert!((integral(&redistributed) - integral(&original)).abs() <= 1e-9 * integral(&original));
    assert_eq!(redistributed.density_at(0.03), 0.0);
    assert!(redistributed.density_at(0.08) > original.density_at(0.08));

    let excluded =
        acouswarm_core::mitigation::avoided_density(&original, (0.02, 0.06), false, 0.20)
            .unwrap();
    assert!(integral(&excluded) < integral(&original));
    assert_eq!(excluded.density_at(0.08), original.density_at(0.08));
}

#[test]
fn synchronized_bursts_help_deep_robots() {
    let s = swarm_scenario(1e12);
    let burst = synchronized_burst_power(&s, 300e3, 0.5, (0.0, 0.05)).unwrap();
    let deep = 0.15;
    let burst_power = burst.burst.power_at(deep);
    let baseline_power = burst.baseline.power_at(deep);
    assert!(
        burst_power > baseline_power,
        "burst {burst_power:.3e} vs baseline {baseline_power:.3e}"
    );
    // shallow robots collect nothing during the burst
    assert_eq!(burst.burst.power_at(0.02), 0.0);
    // the time average lies between the phases at every depth
    for ((b, base), avg) in burst
        .burst
        .samples
        .iter()
        .zip(&burst.baseline.samples)
        .zip(&burst.time_average_power)
    {
        let lo = b.robot_power.min(base.robot_power);
        let hi = b.robot_power.max(base.robot_power);
        assert!(*avg >= lo - 1e-30 && *avg <= hi + 1e-30);
    }
}

#[test]
fn zero_off_fraction_collapses_to_baseline() {
    let s = swarm_scenario(1e11);
    let burst = synchronized_burst_power(&s, 300e3, 0.0, (0.0, 0.05)).unwrap();
    for ((b, base), avg) in burst
        .burst
        .samples
        .iter()
        .zip(&burst.baseline.samples)
        .zip(&burst.time_average_power)
    {
        // phase weights: average = baseline when s = 0
        assert_eq!(*avg, base.robot_power);
        let _ = b;
    }
}
