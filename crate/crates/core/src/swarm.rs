//! Self-consistent pressure propagation through tissue containing
//! absorbing robots.
//!
//! Randomly positioned robots scatter incoherently, so their attenuation
//! adds per robot: amplitude attenuation n sigma / 2. The absorption
//! cross section depends on the local pressure (through the drive-
//! parameter branches), which couples the field to the swarm:
//! dp/dx = -(alpha_tissue f + alpha_robot(p, x)) p.
//! The tissue term is handled exactly with an integrating factor; the
//! robot term is integrated with fixed-step classical RK4 and a mandatory
//! step-halving check.

use crate::error::{Result, SimError};
use crate::mitigation::capped_load;
use crate::piston::{drive_parameter, internal_drag, optimal_load, piston_power};
use crate::cross_section::{
    absorption_cross_section, dissipation_cross_section, scattering_cross_section,
    surface_response, CenterMotion, SurfaceResponse,
};
use crate::scenario::{
    DensitySegment, FluidMedium, Numerics, RobotDesign, SourceSpec, SwarmScenario, TissueMedium,
    TissuePath,
};

/// Robot number density along the ray: a base density (robots per m^3)
/// shaped by piecewise-constant multipliers over depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub base: f64,
    pub segments: Vec<DensitySegment>,
}

impl DensityProfile {
    pub fn uniform(base: f64) -> Self {
        DensityProfile {
            base,
            segments: vec![],
        }
    }

    /// Density for a swarm spread through the body volume.
    pub fn from_swarm(swarm: &SwarmScenario) -> Result<Self> {
        let (base, _) = number_density(swarm.robot_count, swarm.body_volume)?;
        Ok(DensityProfile {
            base,
            segments: swarm.density_profile.clone(),
        })
    }

    /// Multiplier at a depth; 1 outside every segment, last match wins.
    pub fn multiplier_at(&self, x: f64) -> f64 {
        let mut m = 1.0;
        for seg in &self.segments {
            if x >= seg.from && x < seg.to {
                m = seg.multiplier;
            }
        }
        m
    }

    /// Local number density at a depth.
    pub fn density_at(&self, x: f64) -> f64 {
        self.base * self.multiplier_at(x)
    }

    fn edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(2 * self.segments.len());
        for seg in &self.segments {
            e.push(seg.from);
            e.push(seg.to);
        }
        e
    }
}

/// Number density and typical neighbor spacing for a swarm of `count`
/// robots in `volume`. The spacing is the cube root of the volume per
/// robot, absent for an empty swarm.
pub fn number_density(count: f64, volume: f64) -> Result<(f64, Option<f64>)> {
    if volume <= 0.0 {
        return Err(SimError::Domain(format!(
            "body volume must be > 0, got {volume}"
        )));
    }
    if count < 0.0 {
        return Err(SimError::Domain(format!(
            "robot count must be >= 0, got {count}"
        )));
    }
    let n = count / volume;
    let spacing = if n > 0.0 { Some(n.powf(-1.0 / 3.0)) } else { None };
    Ok((n, spacing))
}

/// Amplitude attenuation from robots of cross section sigma at number
/// density n: n sigma / 2 (power attenuates twice as fast).
pub fn robot_attenuation(number_density: f64, sigma: f64) -> f64 {
    debug_assert!(number_density >= 0.0 && sigma >= 0.0);
    0.5 * number_density * sigma
}

/// How the robots along the ray respond to the field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AbsorptionPolicy {
    /// Robots slow their pistons to collect at most this power each [W].
    pub cap_per_robot: Option<f64>,
    /// Depth ranges where pistons are stopped (no absorption, no power).
    pub pistons_off: Vec<(f64, f64)>,
    /// Include scattering and boundary-layer dissipation in the robot
    /// attenuation. Off by default: absorption dominates, and the
    /// reference power figures use absorption only.
    pub include_passive: bool,
    /// Additional depths forced onto the sample grid, so related runs
    /// (e.g. burst versus baseline) sample identical depths.
    pub extra_boundaries: Vec<f64>,
}

/// One recorded point of a propagated field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub depth: f64,             // m
    pub pressure: f64,          // Pa
    pub robot_power: f64,       // W per robot at this depth
    pub robot_attenuation: f64, // 1/m (amplitude)
}

/// Sampled pressure and per-robot power versus depth for one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProfile {
    pub frequency: f64,
    pub samples: Vec<FieldSample>,
    /// Integration step used [m].
    pub step: f64,
}

impl FieldProfile {
    /// Sample closest to a depth.
    pub fn sample_at(&self, depth: f64) -> &FieldSample {
        self.samples
            .iter()
            .min_by(|a, b| {
                (a.depth - depth)
                    .abs()
                    .partial_cmp(&(b.depth - depth).abs())
                    .unwrap()
            })
            .expect("profile has samples")
    }

    pub fn pressure_at(&self, depth: f64) -> f64 {
        self.sample_at(depth).pressure
    }

    pub fn power_at(&self, depth: f64) -> f64 {
        self.sample_at(depth).robot_power
    }

    pub fn final_sample(&self) -> &FieldSample {
        self.samples.last().expect("profile has samples")
    }
}

/// Per-robot response at one depth: total cross section entering the
/// attenuation, and the power the robot collects.
pub(crate) struct RobotState {
    pub sigma_total: f64,
    pub power: f64,
}

pub(crate) struct RobotResponse<'a> {
    robot: &'a RobotDesign,
    fluid: &'a FluidMedium,
    k_internal: f64,
}

impl<'a> RobotResponse<'a> {
    pub fn new(robot: &'a RobotDesign, fluid: &'a FluidMedium) -> Self {
        RobotResponse {
            robot,
            fluid,
            k_internal: internal_drag(&robot.piston, robot, fluid),
        }
    }

    /// Cross section and collected power at local pressure `p`, under the
    /// policy's cap and piston-off state.
    pub fn state(
        &self,
        p: f64,
        frequency: f64,
        medium: &TissueMedium,
        policy: &AbsorptionPolicy,
        off: bool,
    ) -> RobotState {
        let pistons = self.robot.num_pistons as f64 * self.robot.duty_cycle;
        let geom = &self.robot.piston;

        let (sigma_abs, power, load_ratio) = if off || pistons == 0.0 || p <= 0.0 {
            (0.0, 0.0, None)
        } else {
            match policy.cap_per_robot {
                Some(cap) if cap > 0.0 => {
                    let cap_per_piston = cap / pistons;
                    let uncapped = piston_power(p, frequency, geom, self.k_internal);
                    if uncapped.load <= cap_per_piston {
                        (
                            absorption_cross_section(self.robot, self.k_internal, p, frequency, medium),
                            pistons * uncapped.load,
                            Some(uncapped.load_ratio),
                        )
                    } else {
                        let ratio = capped_load(p, frequency, geom, self.k_internal, cap_per_piston);
                        let k_total = self.k_internal * (1.0 + ratio);
                        let ap = geom.face_area * p;
                        // slowed pistons stay sinusoidal: P_total = A^2 p^2 / (2 k_total)
                        let total = 0.5 * ap * ap / k_total;
                        let flux = p * p / (2.0 * medium.density * medium.sound_speed);
                        (pistons * total / flux, cap, Some(ratio))
                    }
                }
                _ => (
                    absorption_cross_section(self.robot, self.k_internal, p, frequency, medium),
                    pistons * piston_power(p, frequency, geom, self.k_internal).load,
                    Some(optimal_load(drive_parameter(p, frequency, geom, self.k_internal))),
                ),
            }
        };

        let mut sigma_total = sigma_abs;
        if policy.include_passive {
            let response = match load_ratio {
                Some(ratio) => {
                    surface_response(self.robot, self.k_internal * (1.0 + ratio), medium)
                }
                None => SurfaceResponse::locked(),
            };
            let k = medium.wave_number(frequency);
            sigma_total += scattering_cross_section(
                self.robot.radius,
                k,
                response.beta_c_rho,
                CenterMotion::Free,
            )
            .unwrap_or(0.0);
            sigma_total += dissipation_cross_section(self.robot.radius, frequency, self.fluid);
        }

        RobotState {
            sigma_total,
            power,
        }
    }
}

fn in_ranges(x: f64, ranges: &[(f64, f64)]) -> bool {
    ranges.iter().any(|(a, b)| x >= *a && x < *b)
}

/// Sorted, deduplicated depths at which intervals break: segment edges,
/// density and policy edges, and the sample grid.
pub(crate) fn build_boundaries(
    path: &TissuePath,
    density: &DensityProfile,
    policy: &AbsorptionPolicy,
    numerics: &Numerics,
) -> Vec<f64> {
    let total = path.total_length();
    let mut edges = vec![0.0, total];
    let mut x = 0.0;
    for (_, len) in &path.segments {
        x += len;
        edges.push(x);
    }
    let mut grid = 0.0;
    while grid < total {
        grid += numerics.sample_spacing;
        if grid < total {
            edges.push(grid);
        }
    }
    edges.extend(density.edges());
    for (a, b) in &policy.pistons_off {
        edges.push(*a);
        edges.push(*b);
    }
    edges.extend(policy.extra_boundaries.iter().copied());
    edges.retain(|&e| (0.0..=total).contains(&e));
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    edges
}

struct SegmentSpan {
    medium_index: usize,
    start: f64,
    end: f64,
    /// true when `end` is a tissue interface or the path end
    closes_segment: bool,
}

/// Split the boundary list into integration spans, each inside one tissue
/// segment.
fn spans(path: &TissuePath, boundaries: &[f64]) -> Vec<SegmentSpan> {
    let mut spans = Vec::new();
    let mut seg_end = Vec::new();
    let mut x = 0.0;
    for (_, len) in &path.segments {
        x += len;
        seg_end.push(x);
    }
    let mut seg = 0;
    for w in boundaries.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-12 {
            continue;
        }
        while seg + 1 < seg_end.len() && a >= seg_end[seg] - 1e-12 {
            seg += 1;
        }
        spans.push(SegmentSpan {
            medium_index: seg,
            start: a,
            end: b,
            closes_segment: (b - seg_end[seg]).abs() < 1e-12,
        });
    }
    spans
}

#[allow(clippy::too_many_arguments)]
fn integrate_once(
    p0: f64,
    path: &TissuePath,
    frequency: f64,
    response: &RobotResponse,
    density: &DensityProfile,
    policy: &AbsorptionPolicy,
    step: f64,
    boundaries: &[f64],
) -> Vec<FieldSample> {
    let spans = spans(path, boundaries);
    let mut samples = Vec::with_capacity(boundaries.len());

    let record = |samples: &mut Vec<FieldSample>, depth: f64, p: f64, off: bool| {
        let state = response.state(p, frequency, path.medium_at(depth.min(path.total_length() * (1.0 - 1e-15))), policy, off);
        samples.push(FieldSample {
            depth,
            pressure: p,
            robot_power: state.power,
            robot_attenuation: robot_attenuation(density.density_at(depth), state.sigma_total),
        });
    };

    let skin_off = in_ranges(0.0, &policy.pistons_off);
    record(&mut samples, 0.0, p0, skin_off);

    let mut pressure = p0; // at the start of the current span
    let mut segment_origin = 0.0; // depth where the current segment began
    let mut interfaces_crossed = 0usize;

    for span in &spans {
        let medium = &path.segments[span.medium_index].0;
        let atf = medium.absorption * frequency;
        let mid = 0.5 * (span.start + span.end);
        let mult = density.multiplier_at(mid);
        let off = in_ranges(mid, &policy.pistons_off);
        let n_local = density.base * mult;

        // q is the pressure with the tissue decay factored out, relative
        // to the segment entry: p(x) = q(x) exp(-atf (x - segment_origin))
        let mut q = pressure * (atf * (span.start - segment_origin)).exp();
        let len = span.end - span.start;
        let n_steps = (len / step).ceil().max(1.0) as usize;
        let h = len / n_steps as f64;

        let rhs = |x: f64, q: f64| -> f64 {
            if n_local == 0.0 {
                return 0.0;
            }
            let p = q * (-atf * (x - segment_origin)).exp();
            let state = response.state(p, frequency, medium, policy, off);
            -robot_attenuation(n_local, state.sigma_total) * q
        };

        let mut x = span.start;
        for _ in 0..n_steps {
            let k1 = rhs(x, q);
            let k2 = rhs(x + 0.5 * h, q + 0.5 * h * k1);
            let k3 = rhs(x + 0.5 * h, q + 0.5 * h * k2);
            let k4 = rhs(x + h, q + h * k3);
            q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            x += h;
        }

        pressure = q * (-atf * (span.end - segment_origin)).exp();

        if span.closes_segment {
            if interfaces_crossed < path.interface_energy_transmission.len() {
                pressure *= path.interface_energy_transmission[interfaces_crossed].sqrt();
                interfaces_crossed += 1;
            }
            segment_origin = span.end;
        }

        let off_at_sample = in_ranges(span.end, &policy.pistons_off);
        record(&mut samples, span.end, pressure, off_at_sample);
    }

    samples
}

/// Propagate the pressure field from the skin inward through tissue and
/// robots, returning samples on the configured grid. Fails with a
/// convergence error if halving the step moves any sampled pressure by
/// more than 0.1%.
#[allow(clippy::too_many_arguments)]
pub fn propagate_profile(
    source: &SourceSpec,
    path: &TissuePath,
    frequency: f64,
    robot: &RobotDesign,
    fluid: &FluidMedium,
    density: &DensityProfile,
    policy: &AbsorptionPolicy,
    numerics: &Numerics,
) -> Result<FieldProfile> {
    let first = &path
        .segments
        .first()
        .ok_or_else(|| SimError::Range("path has no segments".to_string()))?
        .0;
    let p0 = source.pressure_at(frequency, first)?;
    let response = RobotResponse::new(robot, fluid);
    let boundaries = build_boundaries(path, density, policy, numerics);

    let step = numerics.field_step;
    let samples = integrate_once(
        p0, path, frequency, &response, density, policy, step, &boundaries,
    );
    let halved = integrate_once(
        p0,
        path,
        frequency,
        &response,
        density,
        policy,
        step / 2.0,
        &boundaries,
    );
    for (a, b) in samples.iter().zip(&halved) {
        let scale = b.pressure.abs().max(p0 * 1e-12);
        if (a.pressure - b.pressure).abs() > 1e-3 * scale {
            return Err(SimError::Convergence(format!(
                "halving the field step moved the pressure at {:.4} m from \
                 {:.6e} to {:.6e} Pa (> 0.1%); reduce numerics.field_step",
                a.depth, a.pressure, b.pressure
            )));
        }
    }

    Ok(FieldProfile {
        frequency,
        samples,
        step,
    })
}

/// Density-weighted mean robot power along the profile and the total
/// collected by the whole swarm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSummary {
    pub mean_robot_power: f64,
    pub total_swarm_power: f64,
}

/// Average the per-robot power over depth, weighting by the local robot
/// density, and scale by the swarm size.
pub fn swarm_power_summary(profile: &FieldProfile, swarm: &SwarmScenario) -> PowerSummary {
    let density = DensityProfile {
        base: 1.0,
        segments: swarm.density_profile.clone(),
    };
    let mut weighted = 0.0;
    let mut weight = 0.0;
    for w in profile.samples.windows(2) {
        let dx = w[1].depth - w[0].depth;
        let mid = 0.5 * (w[0].depth + w[1].depth);
        let m = density.multiplier_at(mid);
        weighted += 0.5 * (w[0].robot_power + w[1].robot_power) * m * dx;
        weight += m * dx;
    }
    let mean = if weight > 0.0 { weighted / weight } else { 0.0 };
    PowerSummary {
        mean_robot_power: mean,
        total_swarm_power: mean * swarm.robot_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use crate::tissue::path_pressure;
    use approx::assert_relative_eq;

    #[test]
    fn number_density_reference_rows() {
        let (n, spacing) = number_density(1e11, 0.05).unwrap();
        assert_relative_eq!(n, 2e12, max_relative = 1e-12);
        assert_relative_eq!(spacing.unwrap(), 80e-6, max_relative = 0.05);

        // the 40 µm table entry rounds 36.8 µm up
        let (n, spacing) = number_density(1e12, 0.05).unwrap();
        assert_relative_eq!(n, 2e13, max_relative = 1e-12);
        assert_relative_eq!(spacing.unwrap(), 40e-6, max_relative = 0.10);

        let (n, spacing) = number_density(1e10, 0.05).unwrap();
        assert_relative_eq!(n, 2e11, max_relative = 1e-12);
        assert_relative_eq!(spacing.unwrap(), 170e-6, max_relative = 0.05);

        let (n, spacing) = number_density(0.0, 0.05).unwrap();
        assert_eq!(n, 0.0);
        assert!(spacing.is_none());
    }

    #[test]
    fn attenuation_is_half_n_sigma_and_additive() {
        assert_relative_eq!(robot_attenuation(2e12, 2.78e-12), 2.78, max_relative = 1e-12);
        assert_eq!(robot_attenuation(2e12, 0.0), 0.0);
        let total = robot_attenuation(1e12, 3e-12) + robot_attenuation(5e11, 1e-12);
        assert_relative_eq!(
            total,
            0.5 * (1e12 * 3e-12 + 5e11 * 1e-12),
            max_relative = 1e-12
        );
    }

    #[test]
    fn multiplier_lookup() {
        let d = DensityProfile {
            base: 2e12,
            segments: vec![DensitySegment {
                from: 0.02,
                to: 0.05,
                multiplier: 0.0,
            }],
        };
        assert_eq!(d.multiplier_at(0.01), 1.0);
        assert_eq!(d.multiplier_at(0.03), 0.0);
        assert_eq!(d.multiplier_at(0.06), 1.0);
    }

    #[test]
    fn empty_swarm_reduces_to_tissue_attenuation() {
        let s = Scenario::table();
        let profile = propagate_profile(
            &s.source,
            &s.path,
            300e3,
            &s.robot,
            &s.fluid,
            &DensityProfile::uniform(0.0),
            &AbsorptionPolicy::default(),
            &s.numerics,
        )
        .unwrap();
        for sample in profile.samples.iter().step_by(17) {
            let expected = path_pressure(&s.source, &s.path, 300e3, sample.depth).unwrap();
            assert_relative_eq!(sample.pressure, expected, max_relative = 1e-9);
            assert_eq!(sample.robot_attenuation, 0.0);
        }
    }

    #[test]
    fn profile_power_matches_robot_power() {
        let s = Scenario::table();
        let density = DensityProfile::from_swarm(&SwarmScenario::uniform(1e11)).unwrap();
        let profile = propagate_profile(
            &s.source,
            &s.path,
            100e3,
            &s.robot,
            &s.fluid,
            &density,
            &AbsorptionPolicy::default(),
            &s.numerics,
        )
        .unwrap();
        for sample in profile.samples.iter().step_by(13) {
            let expected =
                crate::piston::robot_power(&s.robot, sample.pressure, 100e3, &s.fluid);
            assert_relative_eq!(sample.robot_power, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn pressure_monotone_in_depth_and_swarm_size() {
        let s = Scenario::table();
        let mut previous: Option<FieldProfile> = None;
        for count in [0.0, 1e10, 1e11, 1e12] {
            let density = DensityProfile::from_swarm(&SwarmScenario::uniform(count)).unwrap();
            let profile = propagate_profile(
                &s.source,
                &s.path,
                300e3,
                &s.robot,
                &s.fluid,
                &density,
                &AbsorptionPolicy::default(),
                &s.numerics,
            )
            .unwrap();
            let mut last = f64::INFINITY;
            for sample in &profile.samples {
                assert!(sample.pressure <= last * (1.0 + 1e-12));
                last = sample.pressure;
            }
            if let Some(prev) = &previous {
                for (more, fewer) in profile.samples.iter().zip(&prev.samples) {
                    assert!(more.pressure <= fewer.pressure * (1.0 + 1e-12));
                    assert!(more.robot_power <= fewer.robot_power * (1.0 + 1e-12));
                }
            }
            previous = Some(profile);
        }
    }

    #[test]
    fn robot_attenuation_grows_where_drive_drops_below_two() {
        // in the overdriven region sigma_abs rises as 1/p, so alpha_robot
        // is non-decreasing along the ray
        let s = Scenario::table();
        let density = DensityProfile::from_swarm(&SwarmScenario::uniform(1e12)).unwrap();
        let profile = propagate_profile(
            &s.source,
            &s.path,
            100e3,
            &s.robot,
            &s.fluid,
            &density,
            &AbsorptionPolicy::default(),
            &s.numerics,
        )
        .unwrap();
        let mut last = 0.0;
        for sample in &profile.samples {
            assert!(sample.robot_attenuation >= last * (1.0 - 1e-12));
            last = sample.robot_attenuation;
        }
    }

    #[test]
    fn summary_scale_for_1e11_robots() {
        let s = Scenario::table();
        let swarm = SwarmScenario::uniform(1e11);
        let density = DensityProfile::from_swarm(&swarm).unwrap();
        let profile = propagate_profile(
            &s.source,
            &s.path,
            100e3,
            &s.robot,
            &s.fluid,
            &density,
            &AbsorptionPolicy::default(),
            &s.numerics,
        )
        .unwrap();
        let summary = swarm_power_summary(&profile, &swarm);
        // hundreds of pW per robot near the source, tens of watts in total,
        // a small portion of the ~1000 W delivered over the body surface
        assert!(summary.mean_robot_power > 50e-12 && summary.mean_robot_power < 1e-9);
        assert!(summary.total_swarm_power > 1.0 && summary.total_swarm_power < 100.0);
        assert!(summary.total_swarm_power < 0.1 * 1000.0);

        let empty = swarm_power_summary(&profile, &SwarmScenario::uniform(0.0));
        assert_eq!(empty.total_swarm_power, 0.0);
    }

    #[test]
    fn summary_weighting_recomputed_at_two_densities() {
        // with sigma_abs pressure-independent (low pressure) the shape of
        // the profile depends on N, so recompute rather than assume
        let s = Scenario::table();
        let mut src = s.source.clone();
        src.frequencies[0].pressure = Some(10e3);
        src.intensity = 50.0;
        for count in [1e10, 1e11] {
            let swarm = SwarmScenario::uniform(count);
            let density = DensityProfile::from_swarm(&swarm).unwrap();
            let profile = propagate_profile(
                &src,
                &s.path,
                500e3,
                &s.robot,
                &s.fluid,
                &density,
                &AbsorptionPolicy::default(),
                &s.numerics,
            )
            .unwrap();
            let summary = swarm_power_summary(&profile, &swarm);
            assert_relative_eq!(
                summary.total_swarm_power,
                summary.mean_robot_power * count,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn passive_components_add_attenuation() {
        let s = Scenario::table();
        let density = DensityProfile::from_swarm(&SwarmScenario::uniform(1e12)).unwrap();
        let absorbing_only = propagate_profile(
            &s.source,
            &s.path,
            100e3,
            &s.robot,
            &s.fluid,
            &density,
            &AbsorptionPolicy::default(),
            &s.numerics,
        )
        .unwrap();
        let with_passive = propagate_profile(
            &s.source,
            &s.path,
            100e3,
            &s.robot,
            &s.fluid,
            &density,
            &AbsorptionPolicy {
                include_passive: true,
                ..Default::default()
            },
            &s.numerics,
        )
        .unwrap();
        let deep_a = absorbing_only.final_sample();
        let deep_b = with_passive.final_sample();
        assert!(deep_b.pressure < deep_a.pressure);
        assert!(deep_b.robot_attenuation > deep_a.robot_attenuation);
    }
}
