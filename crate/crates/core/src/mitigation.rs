//! Swarm strategies that reshape attenuation: per-robot power caps,
//! dual-frequency allocation, path avoidance, and synchronized duty
//! cycles.
//!
//! Every strategy with non-binding parameters degenerates exactly to the
//! unmitigated profile.

use crate::error::{Result, SimError};
use crate::piston::{drive_parameter, optimal_load, piston_power};
use crate::scenario::{
    AcousticMedium, DensitySegment, MitigationStrategy, PistonGeometry, Scenario,
};
use crate::swarm::{
    build_boundaries, propagate_profile, AbsorptionPolicy, DensityProfile, FieldProfile,
    FieldSample, RobotResponse,
};

/// Load ratio for a piston limited to `cap_per_piston` of load power.
///
/// If the optimally loaded piston already stays within the cap, the
/// optimal load is returned. Otherwise the piston is slowed by a larger
/// load: the returned ratio is the larger root of
///     (1/2) A^2 p^2 k_load / (k_f + k_load)^2 = cap,
/// which keeps the motion sinusoidal (slowing the piston dissipates less
/// than stopping it for part of each cycle).
pub fn capped_load(
    pressure: f64,
    frequency: f64,
    geom: &PistonGeometry,
    k_internal: f64,
    cap_per_piston: f64,
) -> f64 {
    debug_assert!(cap_per_piston > 0.0);
    let lambda = drive_parameter(pressure, frequency, geom, k_internal);
    let unconstrained = piston_power(pressure, frequency, geom, k_internal);
    if unconstrained.load <= cap_per_piston {
        return optimal_load(lambda);
    }
    // cap k^2 + (2 cap k_f - s) k + cap k_f^2 = 0 with s = A^2 p^2 / 2;
    // binding caps make b negative, so the larger root -b + sqrt(disc)
    // is free of cancellation
    let ap = geom.face_area * pressure;
    let s = 0.5 * ap * ap;
    let b = 2.0 * cap_per_piston * k_internal - s;
    let disc = b * b - 4.0 * cap_per_piston * cap_per_piston * k_internal * k_internal;
    let k_load = (-b + disc.max(0.0).sqrt()) / (2.0 * cap_per_piston);
    k_load / k_internal
}

/// Field profile with every robot collecting at most `cap_per_robot`.
pub fn capped_profile(
    scenario: &Scenario,
    frequency: f64,
    cap_per_robot: f64,
) -> Result<FieldProfile> {
    let density = DensityProfile::from_swarm(&scenario.swarm)?;
    propagate_profile(
        &scenario.source,
        &scenario.path,
        frequency,
        &scenario.robot,
        &scenario.fluid,
        &density,
        &AbsorptionPolicy {
            cap_per_robot: Some(cap_per_robot),
            include_passive: scenario.numerics.include_passive,
            ..Default::default()
        },
        &scenario.numerics,
    )
}

/// Unmitigated baseline profile for the scenario's swarm.
pub fn baseline_profile(scenario: &Scenario, frequency: f64) -> Result<FieldProfile> {
    let density = DensityProfile::from_swarm(&scenario.swarm)?;
    propagate_profile(
        &scenario.source,
        &scenario.path,
        frequency,
        &scenario.robot,
        &scenario.fluid,
        &density,
        &AbsorptionPolicy {
            include_passive: scenario.numerics.include_passive,
            ..Default::default()
        },
        &scenario.numerics,
    )
}

/// Coupled two-frequency fields with the robots' per-depth choice.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFrequencyProfile {
    pub low: FieldProfile,
    pub high: FieldProfile,
    /// Per sample: robots at this depth harvest the high frequency.
    pub chosen_high: Vec<bool>,
    /// Per sample: power collected from the chosen frequency [W].
    pub delivered_power: Vec<f64>,
    /// Depth where robots switch from the high to the low frequency.
    pub crossover_depth: Option<f64>,
}

/// Split the source between two frequencies. Robots harvest the high
/// frequency wherever it still delivers at least `threshold_per_robot`,
/// and the low frequency beyond; the unchosen wave sees only passive
/// attenuation. The choice at a depth depends only on upstream state, so
/// one inward pass integrates both fields.
pub fn dual_frequency_profile(
    scenario: &Scenario,
    f_low: f64,
    f_high: f64,
    shares: (f64, f64),
    threshold_per_robot: f64,
) -> Result<DualFrequencyProfile> {
    if shares.0 + shares.1 > 1.0 + 1e-12 {
        return Err(SimError::Domain(format!(
            "intensity shares {} + {} exceed the safety budget",
            shares.0, shares.1
        )));
    }
    let path = &scenario.path;
    let first = &path
        .segments
        .first()
        .ok_or_else(|| SimError::Range("path has no segments".to_string()))?
        .0;
    let source = &scenario.source;
    let band_pressure = |f: f64, share: f64| -> f64 {
        for band in &source.frequencies {
            if (band.frequency - f).abs() <= 1e-9 * f {
                return source.band_pressure(band, first);
            }
        }
        (1.0 - source.reflection_loss_fraction)
            * (2.0 * first.impedance() * source.intensity * share).sqrt()
    };
    let p0 = [band_pressure(f_low, shares.0), band_pressure(f_high, shares.1)];
    let freq = [f_low, f_high];

    let density = DensityProfile::from_swarm(&scenario.swarm)?;
    let policy = AbsorptionPolicy {
        include_passive: scenario.numerics.include_passive,
        ..Default::default()
    };
    let response = RobotResponse::new(&scenario.robot, &scenario.fluid);
    let boundaries = build_boundaries(path, &density, &policy, &scenario.numerics);

    let run = |step: f64| -> DualIntegration {
        integrate_dual(
            p0,
            freq,
            path,
            &response,
            &density,
            &policy,
            threshold_per_robot,
            step,
            &boundaries,
        )
    };
    let base = run(scenario.numerics.field_step);
    let halved = run(scenario.numerics.field_step / 2.0);
    for k in 0..2 {
        for (a, b) in base.samples[k].iter().zip(&halved.samples[k]) {
            let scale = b.pressure.abs().max(p0[k] * 1e-12);
            if (a.pressure - b.pressure).abs() > 1e-3 * scale {
                return Err(SimError::Convergence(format!(
                    "halving the field step moved the {} Hz pressure at \
                     {:.4} m by more than 0.1%",
                    freq[k], a.depth
                )));
            }
        }
    }

    let [low_samples, high_samples] = base.samples;
    Ok(DualFrequencyProfile {
        low: FieldProfile {
            frequency: f_low,
            samples: low_samples,
            step: scenario.numerics.field_step,
        },
        high: FieldProfile {
            frequency: f_high,
            samples: high_samples,
            step: scenario.numerics.field_step,
        },
        chosen_high: base.chosen_high,
        delivered_power: base.delivered_power,
        crossover_depth: base.crossover_depth,
    })
}

struct DualIntegration {
    samples: [Vec<FieldSample>; 2],
    chosen_high: Vec<bool>,
    delivered_power: Vec<f64>,
    crossover_depth: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn integrate_dual(
    p0: [f64; 2],
    freq: [f64; 2],
    path: &crate::scenario::TissuePath,
    response: &RobotResponse,
    density: &DensityProfile,
    policy: &AbsorptionPolicy,
    threshold: f64,
    step: f64,
    boundaries: &[f64],
) -> DualIntegration {
    let mut samples = [Vec::new(), Vec::new()];
    let mut chosen_high = Vec::new();
    let mut delivered = Vec::new();
    let mut crossover = None;

    // robots prefer the high frequency while it meets the threshold; the
    // unchosen field keeps only its passive attenuation
    let power_of = |p: f64, k: usize, medium: &crate::scenario::TissueMedium| {
        response.state(p, freq[k], medium, policy, false).power
    };

    let record =
        |samples: &mut [Vec<FieldSample>; 2],
         chosen_high: &mut Vec<bool>,
         delivered: &mut Vec<f64>,
         depth: f64,
         p: [f64; 2],
         medium: &crate::scenario::TissueMedium| {
            let high_power = power_of(p[1], 1, medium);
            let use_high = high_power >= threshold;
            let low_state = response.state(p[0], freq[0], medium, policy, false);
            let high_state = response.state(p[1], freq[1], medium, policy, false);
            let n = density.density_at(depth);
            for (k, state) in [&low_state, &high_state].into_iter().enumerate() {
                let absorbs = (k == 1) == use_high;
                samples[k].push(FieldSample {
                    depth,
                    pressure: p[k],
                    robot_power: state.power,
                    robot_attenuation: if absorbs {
                        crate::swarm::robot_attenuation(n, state.sigma_total)
                    } else {
                        0.0
                    },
                });
            }
            chosen_high.push(use_high);
            delivered.push(if use_high { high_state.power } else { low_state.power });
        };

    let first = &path.segments[0].0;
    record(
        &mut samples,
        &mut chosen_high,
        &mut delivered,
        0.0,
        p0,
        first,
    );
    let mut high_meets = power_of(p0[1], 1, first) >= threshold;

    let mut pressure = p0;
    let mut segment_origin = 0.0;
    let mut interfaces_crossed = 0usize;
    let mut seg_end = Vec::new();
    {
        let mut x = 0.0;
        for (_, len) in &path.segments {
            x += len;
            seg_end.push(x);
        }
    }
    let mut seg = 0usize;

    for w in boundaries.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-12 {
            continue;
        }
        while seg + 1 < seg_end.len() && a >= seg_end[seg] - 1e-12 {
            seg += 1;
        }
        let medium = &path.segments[seg].0;
        let atf = [
            medium.absorption * freq[0],
            medium.absorption * freq[1],
        ];
        let mid = 0.5 * (a + b);
        let n_local = density.density_at(mid);

        let mut q = [
            pressure[0] * (atf[0] * (a - segment_origin)).exp(),
            pressure[1] * (atf[1] * (a - segment_origin)).exp(),
        ];
        let len = b - a;
        let n_steps = (len / step).ceil().max(1.0) as usize;
        let h = len / n_steps as f64;

        let rhs = |x: f64, q: [f64; 2]| -> [f64; 2] {
            if n_local == 0.0 {
                return [0.0, 0.0];
            }
            let p = [
                q[0] * (-atf[0] * (x - segment_origin)).exp(),
                q[1] * (-atf[1] * (x - segment_origin)).exp(),
            ];
            let use_high = power_of(p[1], 1, medium) >= threshold;
            let mut out = [0.0, 0.0];
            for k in 0..2 {
                let absorbs = (k == 1) == use_high;
                if absorbs {
                    let state = response.state(p[k], freq[k], medium, policy, false);
                    out[k] = -crate::swarm::robot_attenuation(n_local, state.sigma_total) * q[k];
                }
            }
            out
        };

        let mut x = a;
        for _ in 0..n_steps {
            let k1 = rhs(x, q);
            let q2 = [q[0] + 0.5 * h * k1[0], q[1] + 0.5 * h * k1[1]];
            let k2 = rhs(x + 0.5 * h, q2);
            let q3 = [q[0] + 0.5 * h * k2[0], q[1] + 0.5 * h * k2[1]];
            let k3 = rhs(x + 0.5 * h, q3);
            let q4 = [q[0] + h * k3[0], q[1] + h * k3[1]];
            let k4 = rhs(x + h, q4);
            let p_before = q[1] * (-atf[1] * (x - segment_origin)).exp();
            for k in 0..2 {
                q[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            }
            x += h;
            // locate the threshold crossing of the high-frequency power
            if high_meets && crossover.is_none() {
                let p_after = q[1] * (-atf[1] * (x - segment_origin)).exp();
                let pw_before = power_of(p_before, 1, medium);
                let pw_after = power_of(p_after, 1, medium);
                if pw_after < threshold {
                    let t = if pw_before > pw_after {
                        ((pw_before - threshold) / (pw_before - pw_after)).clamp(0.0, 1.0)
                    } else {
                        1.0
                    };
                    crossover = Some(x - h + t * h);
                    high_meets = false;
                }
            }
        }

        for k in 0..2 {
            pressure[k] = q[k] * (-atf[k] * (b - segment_origin)).exp();
        }
        if (b - seg_end[seg]).abs() < 1e-12 {
            if interfaces_crossed < path.interface_energy_transmission.len() {
                let t = path.interface_energy_transmission[interfaces_crossed].sqrt();
                pressure[0] *= t;
                pressure[1] *= t;
                interfaces_crossed += 1;
            }
            segment_origin = b;
        }
        record(
            &mut samples,
            &mut chosen_high,
            &mut delivered,
            b,
            pressure,
            medium,
        );
    }

    DualIntegration {
        samples,
        chosen_high,
        delivered_power: delivered,
        crossover_depth: crossover,
    }
}

/// Profile with robots absent from a depth range. With `redistribute`,
/// the displaced robots raise the density elsewhere so that the
/// depth-integrated density is conserved; otherwise they are simply
/// absent from the ray.
pub fn avoid_path_profile(
    scenario: &Scenario,
    frequency: f64,
    avoided: (f64, f64),
    redistribute: bool,
) -> Result<FieldProfile> {
    let total = scenario.path.total_length();
    if !(avoided.0 >= 0.0 && avoided.1 <= total && avoided.0 <= avoided.1) {
        return Err(SimError::Range(format!(
            "avoided range [{}, {}] outside the {} m path",
            avoided.0, avoided.1, total
        )));
    }
    let uniform = DensityProfile::from_swarm(&scenario.swarm)?;
    let density = avoided_density(&uniform, avoided, redistribute, total)?;
    propagate_profile(
        &scenario.source,
        &scenario.path,
        frequency,
        &scenario.robot,
        &scenario.fluid,
        &density,
        &AbsorptionPolicy {
            include_passive: scenario.numerics.include_passive,
            ..Default::default()
        },
        &scenario.numerics,
    )
}

/// Uniform-density profile sampled on the same grid as the avoided run,
/// for side-by-side comparison.
pub fn uniform_reference_profile(
    scenario: &Scenario,
    frequency: f64,
    avoided: (f64, f64),
) -> Result<FieldProfile> {
    let density = DensityProfile::from_swarm(&scenario.swarm)?;
    propagate_profile(
        &scenario.source,
        &scenario.path,
        frequency,
        &scenario.robot,
        &scenario.fluid,
        &density,
        &AbsorptionPolicy {
            include_passive: scenario.numerics.include_passive,
            extra_boundaries: vec![avoided.0, avoided.1],
            ..Default::default()
        },
        &scenario.numerics,
    )
}

/// Rebuild a density profile with a zeroed range, optionally rescaling
/// the rest to conserve the depth-integrated density.
pub fn avoided_density(
    original: &DensityProfile,
    avoided: (f64, f64),
    redistribute: bool,
    total: f64,
) -> Result<DensityProfile> {
    if avoided.1 <= avoided.0 {
        return Ok(original.clone());
    }
    let mut edges = vec![0.0, total, avoided.0, avoided.1];
    for seg in &original.segments {
        edges.push(seg.from);
        edges.push(seg.to);
    }
    edges.retain(|&e| (0.0..=total).contains(&e));
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut inside = 0.0;
    let mut outside = 0.0;
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let len = w[1] - w[0];
        let m = original.multiplier_at(mid);
        if mid >= avoided.0 && mid < avoided.1 {
            inside += m * len;
        } else {
            outside += m * len;
        }
    }
    let scale = if redistribute {
        if outside <= 0.0 {
            return Err(SimError::Range(
                "cannot redistribute robots: the avoided range covers the whole path".to_string(),
            ));
        }
        (inside + outside) / outside
    } else {
        1.0
    };

    let mut segments = Vec::new();
    for w in edges.windows(2) {
        if w[1] - w[0] <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let multiplier = if mid >= avoided.0 && mid < avoided.1 {
            0.0
        } else {
            original.multiplier_at(mid) * scale
        };
        segments.push(DensitySegment {
            from: w[0],
            to: w[1],
            multiplier,
        });
    }
    Ok(DensityProfile {
        base: original.base,
        segments,
    })
}

/// Burst and baseline fields for synchronized duty cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct SynchronizedBurst {
    /// Field while shallow robots are passive (fraction `off_fraction`
    /// of the time).
    pub burst: FieldProfile,
    /// Field while every robot absorbs.
    pub baseline: FieldProfile,
    /// Per-sample time-averaged robot power,
    /// s * burst + (1 - s) * baseline.
    pub time_average_power: Vec<f64>,
}

/// Two-phase model of synchronized duty cycles: robots in `shallow_range`
/// all stop absorbing for `off_fraction` of the time, making bursts of
/// higher power available to deeper robots.
pub fn synchronized_burst_power(
    scenario: &Scenario,
    frequency: f64,
    off_fraction: f64,
    shallow_range: (f64, f64),
) -> Result<SynchronizedBurst> {
    if !(0.0..1.0).contains(&off_fraction) {
        return Err(SimError::Domain(format!(
            "off fraction must be in [0, 1), got {off_fraction}"
        )));
    }
    let density = DensityProfile::from_swarm(&scenario.swarm)?;
    let include_passive = scenario.numerics.include_passive;
    let burst = propagate_profile(
        &scenario.source,
        &scenario.path,
        frequency,
        &scenario.robot,
        &scenario.fluid,
        &density,
        &AbsorptionPolicy {
            pistons_off: vec![shallow_range],
            include_passive,
            ..Default::default()
        },
        &scenario.numerics,
    )?;
    let baseline = propagate_profile(
        &scenario.source,
        &scenario.path,
        frequency,
        &scenario.robot,
        &scenario.fluid,
        &density,
        &AbsorptionPolicy {
            include_passive,
            extra_boundaries: vec![shallow_range.0, shallow_range.1],
            ..Default::default()
        },
        &scenario.numerics,
    )?;
    let time_average_power = burst
        .samples
        .iter()
        .zip(&baseline.samples)
        .map(|(b, base)| off_fraction * b.robot_power + (1.0 - off_fraction) * base.robot_power)
        .collect();
    Ok(SynchronizedBurst {
        burst,
        baseline,
        time_average_power,
    })
}

/// Result of running a scenario's configured mitigation strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyOutcome {
    Baseline(FieldProfile),
    Capped {
        baseline: FieldProfile,
        capped: FieldProfile,
    },
    Dual(DualFrequencyProfile),
    Avoided {
        uniform: FieldProfile,
        avoided: FieldProfile,
    },
    Burst(SynchronizedBurst),
}

/// Dispatch on the scenario's mitigation strategy at the given frequency
/// (ignored by the dual-frequency strategy, which reads the source bands).
pub fn run_strategy(scenario: &Scenario, frequency: f64) -> Result<StrategyOutcome> {
    match &scenario.swarm.mitigation {
        MitigationStrategy::None => Ok(StrategyOutcome::Baseline(baseline_profile(
            scenario, frequency,
        )?)),
        MitigationStrategy::PowerCap { per_robot } => Ok(StrategyOutcome::Capped {
            baseline: baseline_profile(scenario, frequency)?,
            capped: capped_profile(scenario, frequency, *per_robot)?,
        }),
        MitigationStrategy::SplitFrequency { threshold } => {
            if scenario.source.frequencies.len() != 2 {
                return Err(SimError::Domain(
                    "split-frequency mitigation needs a two-band source".to_string(),
                ));
            }
            let mut bands = scenario.source.frequencies.clone();
            bands.sort_by(|a, b| a.frequency.partial_cmp(&b.frequency).unwrap());
            Ok(StrategyOutcome::Dual(dual_frequency_profile(
                scenario,
                bands[0].frequency,
                bands[1].frequency,
                (bands[0].share, bands[1].share),
                *threshold,
            )?))
        }
        MitigationStrategy::AvoidPath {
            range,
            redistribute,
        } => Ok(StrategyOutcome::Avoided {
            uniform: uniform_reference_profile(scenario, frequency, *range)?,
            avoided: avoid_path_profile(scenario, frequency, *range, *redistribute)?,
        }),
        MitigationStrategy::SyncDutyCycle {
            off_fraction,
            shallow_range,
        } => Ok(StrategyOutcome::Burst(synchronized_burst_power(
            scenario,
            frequency,
            *off_fraction,
            *shallow_range,
        )?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piston::internal_drag;
    use crate::scenario::FluidMedium;
    use approx::assert_relative_eq;

    fn k_f() -> f64 {
        let r = crate::scenario::RobotDesign::table();
        internal_drag(&r.piston, &r, &FluidMedium::water_blood())
    }

    #[test]
    fn non_binding_cap_returns_optimal_load() {
        let geom = PistonGeometry::table();
        let kf = k_f();
        let ratio = capped_load(50e3, 100e3, &geom, kf, 1.0);
        assert_eq!(
            ratio,
            optimal_load(drive_parameter(50e3, 100e3, &geom, kf))
        );
    }

    #[test]
    fn binding_cap_satisfies_the_defining_equation() {
        let geom = PistonGeometry::table();
        let kf = k_f();
        let cap = 10e-12; // well below the ~116 pW unconstrained power
        for (p, f) in [(50e3, 100e3), (50e3, 1000e3), (30e3, 300e3)] {
            let ratio = capped_load(p, f, &geom, kf, cap);
            let k_load = ratio * kf;
            let ap = geom.face_area * p;
            let power = 0.5 * ap * ap * k_load / ((kf + k_load) * (kf + k_load));
            assert_relative_eq!(power, cap, max_relative = 1e-9);
            // slowed motion stays sinusoidal
            let lambda = drive_parameter(p, f, &geom, kf);
            assert!(lambda <= 1.0 + ratio);
        }
    }

    #[test]
    fn binding_cap_agrees_with_bisection() {
        let geom = PistonGeometry::table();
        let kf = k_f();
        let cap = 10e-12;
        let (p, f) = (50e3, 1000e3);
        let ratio = capped_load(p, f, &geom, kf, cap);
        // independent bisection on the decreasing branch of P(k_load)
        let ap = geom.face_area * p;
        let power = |k: f64| 0.5 * ap * ap * k / ((kf + k) * (kf + k));
        let mut lo = kf; // peak of P(k) at k = k_f
        let mut hi = 1.0;
        assert!(power(lo) > cap && power(hi) < cap);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if power(mid) > cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(ratio * kf, 0.5 * (lo + hi), max_relative = 1e-9);
    }
}
