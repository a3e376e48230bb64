//! Scenario data model: typed physical quantities shared by all modules.
//!
//! Every type stores SI values and is an immutable value object after
//! construction, so scenarios can be shared freely between concurrent
//! workers. Default constructors reproduce the reference parameter tables
//! (piston geometry, robot configuration, fluid and tissue properties).

use crate::error::{Result, SimError};
use crate::units::{
    to_si, Dimension, Quantity, FREQUENCY_MAX, FREQUENCY_MIN, SAFETY_INTENSITY,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Pinned source pressures must agree with the amplitude-loss computation
/// within this fraction; the reference table rounds 49.3 kPa to 50 kPa.
const PINNED_PRESSURE_TOLERANCE: f64 = 0.02;

/// Relative tolerance for derived-field consistency checks (areas).
const FIELD_CONSISTENCY: f64 = 1e-12;

/// Maximum admissible k*r for the long-wavelength model.
pub const MAX_KR: f64 = 0.05;

/// Common acoustic properties needed for plane-wave conversions.
pub trait AcousticMedium {
    fn density(&self) -> f64;
    fn sound_speed(&self) -> f64;
    /// Characteristic impedance rho*c [kg/(m^2 s)].
    fn impedance(&self) -> f64 {
        self.density() * self.sound_speed()
    }
}

/// Geometry of one piston and its housing. Lengths in meters, areas in m^2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PistonGeometry {
    /// Piston diameter d.
    pub diameter: f64,
    /// Piston thickness tau.
    pub thickness: f64,
    /// Half of the range of motion (full travel is 2a).
    pub half_range: f64,
    /// Cross-section area A = pi (d/2)^2.
    pub face_area: f64,
    /// Edge area sliding against the housing, pi d tau.
    pub sliding_area: f64,
    /// Housing diameter D.
    pub housing_diameter: f64,
    /// Housing depth H.
    pub housing_depth: f64,
}

impl PistonGeometry {
    /// Build a geometry with the derived areas computed from the lengths.
    pub fn new(
        diameter: f64,
        thickness: f64,
        half_range: f64,
        housing_diameter: f64,
        housing_depth: f64,
    ) -> Self {
        PistonGeometry {
            diameter,
            thickness,
            half_range,
            face_area: PI * (diameter / 2.0) * (diameter / 2.0),
            sliding_area: PI * diameter * thickness,
            housing_diameter,
            housing_depth,
        }
    }

    /// Reference piston: 300 nm diameter, 10 nm thick, 200 nm travel,
    /// in a 340 nm x 440 nm housing.
    pub fn table() -> Self {
        PistonGeometry::new(300e-9, 10e-9, 100e-9, 340e-9, 440e-9)
    }

    /// Swept volume over the full range of motion, 2aA.
    pub fn displacement_volume(&self) -> f64 {
        2.0 * self.half_range * self.face_area
    }
}

/// Constant-force spring: force is proportional to the perpendicular sheet
/// overlap and independent of travel, which lets the robot cancel ambient
/// pressure without storing and re-radiating acoustic energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpringSpec {
    /// Force per unit perpendicular overlap [N/m].
    pub spring_constant: f64,
    /// Largest usable perpendicular overlap L_max [m].
    pub max_perp_overlap: f64,
    /// Largest parallel overlap h_max [m].
    pub max_parallel_overlap: f64,
    /// Upper bound on the sheet overlap area contributing to sliding
    /// friction [m^2].
    pub overlap_area_bound: f64,
}

impl Default for SpringSpec {
    fn default() -> Self {
        SpringSpec {
            spring_constant: 0.2,        // graphene sheets
            max_perp_overlap: 50e-9,
            max_parallel_overlap: 200e-9,
            overlap_area_bound: 1e-14, // 0.01 µm^2
        }
    }
}

/// Viscous and thermal properties of the fluid around the robot
/// (close to water and blood plasma at body temperature).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidMedium {
    pub dynamic_viscosity: f64,    // Pa s
    pub bulk_viscosity: f64,       // Pa s
    pub temperature: f64,          // K
    pub thermal_conductivity: f64, // W/m/K
    pub heat_capacity_cp: f64,     // J/kg/K
    pub heat_capacity_ratio: f64,  // dimensionless
    pub density: f64,              // kg/m^3
    pub sound_speed: f64,          // m/s
}

impl FluidMedium {
    pub fn water_blood() -> Self {
        FluidMedium {
            dynamic_viscosity: 1e-3,
            bulk_viscosity: 3e-3,
            temperature: 310.0,
            thermal_conductivity: 0.6,
            heat_capacity_cp: 4200.0,
            heat_capacity_ratio: 1.02,
            density: 1000.0,
            sound_speed: 1500.0,
        }
    }
}

impl Default for FluidMedium {
    fn default() -> Self {
        FluidMedium::water_blood()
    }
}

impl AcousticMedium for FluidMedium {
    fn density(&self) -> f64 {
        self.density
    }
    fn sound_speed(&self) -> f64 {
        self.sound_speed
    }
}

/// Bulk acoustic properties of a tissue type. The absorption coefficient
/// is stored per Hz per meter; tissue tables quote it per MHz per meter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TissueMedium {
    pub name: String,
    /// Amplitude absorption coefficient alpha [1/(Hz m)]; pressure decays
    /// as exp(-alpha f x).
    pub absorption: f64,
    pub density: f64,     // kg/m^3
    pub sound_speed: f64, // m/s
}

impl TissueMedium {
    pub fn soft_tissue() -> Self {
        TissueMedium {
            name: "soft tissue".to_string(),
            absorption: 8.3e-6,
            density: 1000.0,
            sound_speed: 1500.0,
        }
    }

    pub fn lung() -> Self {
        TissueMedium {
            name: "lung".to_string(),
            absorption: 470e-6,
            density: 1000.0,
            sound_speed: 1500.0,
        }
    }

    /// Wave number 2 pi f / c at frequency f.
    pub fn wave_number(&self, frequency: f64) -> f64 {
        2.0 * PI * frequency / self.sound_speed
    }
}

impl AcousticMedium for TissueMedium {
    fn density(&self) -> f64 {
        self.density
    }
    fn sound_speed(&self) -> f64 {
        self.sound_speed
    }
}

/// Ordered media along a 1-D ray from the transducer, with the fraction of
/// incident *energy* transmitted at each interface between segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TissuePath {
    /// (medium, length in m) pairs, ordered from the skin inward.
    pub segments: Vec<(TissueMedium, f64)>,
    /// One factor in (0, 1] per boundary between consecutive segments.
    pub interface_energy_transmission: Vec<f64>,
}

impl TissuePath {
    pub fn soft_tissue(length: f64) -> Self {
        TissuePath {
            segments: vec![(TissueMedium::soft_tissue(), length)],
            interface_energy_transmission: vec![],
        }
    }

    /// Lung model: soft tissue to the lung surface, then a single lumped
    /// interface passing `transmission` of the incident energy (0.2 by
    /// default to account for impedance mismatch and rib shadowing; 0.36
    /// for the impedance-only estimate).
    pub fn lung(soft_len: f64, lung_len: f64, transmission: f64) -> Self {
        TissuePath {
            segments: vec![
                (TissueMedium::soft_tissue(), soft_len),
                (TissueMedium::lung(), lung_len),
            ],
            interface_energy_transmission: vec![transmission],
        }
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|(_, len)| len).sum()
    }

    /// Medium at a given depth (first segment for depth 0).
    pub fn medium_at(&self, depth: f64) -> &TissueMedium {
        let mut x = 0.0;
        for (medium, len) in &self.segments {
            x += len;
            if depth < x {
                return medium;
            }
        }
        &self.segments.last().expect("path has segments").0
    }
}

/// One frequency component of the source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyBand {
    pub frequency: f64, // Hz
    /// Fraction of the total source intensity carried by this band.
    pub share: f64,
    /// Nominal source pressure in the tissue next to the transducer, if
    /// pinned (table values); otherwise derived from intensity and loss.
    pub pressure: Option<f64>, // Pa
}

/// Ultrasound source: total intensity, reflection loss at the skin, and
/// the frequency bands the intensity is split between.
///
/// Reflection loss is applied to the pressure *amplitude*:
/// p = (1 - loss) sqrt(2 rho c I). The band's pinned pressure, when
/// present, takes precedence and is validated against that computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSpec {
    pub intensity: f64, // W/m^2
    pub reflection_loss_fraction: f64,
    pub frequencies: Vec<FrequencyBand>,
}

impl SourceSpec {
    /// Reference source: 1000 W/m^2, 10% reflection loss, one band at
    /// 100 kHz with the table's nominal 50 kPa source pressure.
    pub fn table() -> Self {
        SourceSpec {
            intensity: 1000.0,
            reflection_loss_fraction: 0.1,
            frequencies: vec![FrequencyBand {
                frequency: 100e3,
                share: 1.0,
                pressure: Some(50e3),
            }],
        }
    }

    /// Source pressure of one band at the skin: the pinned value if
    /// present, else (1 - loss) sqrt(2 rho c I share).
    pub fn band_pressure(&self, band: &FrequencyBand, medium: &impl AcousticMedium) -> f64 {
        band.pressure.unwrap_or_else(|| {
            (1.0 - self.reflection_loss_fraction)
                * (2.0 * medium.impedance() * self.intensity * band.share).sqrt()
        })
    }

    /// Source pressure for a given propagation frequency. Matches a band
    /// by frequency; a single-band source applies its pressure to any
    /// frequency, which is how the frequency-sweep figures are defined.
    pub fn pressure_at(&self, frequency: f64, medium: &impl AcousticMedium) -> Result<f64> {
        for band in &self.frequencies {
            if (band.frequency - frequency).abs() <= 1e-9 * frequency {
                return Ok(self.band_pressure(band, medium));
            }
        }
        if self.frequencies.len() == 1 {
            return Ok(self.band_pressure(&self.frequencies[0], medium));
        }
        Err(SimError::Domain(format!(
            "source has no band at {frequency} Hz and is not single-band"
        )))
    }
}

/// A robot design: a stiff sphere with pistons on its surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotDesign {
    pub radius: f64, // m
    pub piston: PistonGeometry,
    pub spring: SpringSpec,
    pub num_pistons: u32,
    /// Fraction of time the pistons harvest.
    pub duty_cycle: f64,
    /// Fraction of the robot surface occupied by moving piston faces.
    pub surface_fraction_moving: f64,
    /// Viscous drag factor g in k_viscous = g d eta.
    pub drag_factor: f64,
    /// Sliding friction per unit area for atomically smooth surfaces
    /// [kg/(m^2 s)].
    pub sliding_drag_coefficient: f64,
}

impl RobotDesign {
    /// Reference robot: 1 µm radius, 20 pistons at 50% duty cycle.
    pub fn table() -> Self {
        RobotDesign {
            radius: 1e-6,
            piston: PistonGeometry::table(),
            spring: SpringSpec::default(),
            num_pistons: 20,
            duty_cycle: 0.5,
            surface_fraction_moving: 0.11,
            drag_factor: 45.0,
            sliding_drag_coefficient: 1e3,
        }
    }
}

/// Piecewise-constant density multiplier over a depth interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySegment {
    pub from: f64, // m
    pub to: f64,   // m
    pub multiplier: f64,
}

/// Swarm configuration: how many robots share the body, how they are
/// distributed along the ray, and which mitigation strategy they run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwarmScenario {
    pub robot_count: f64,
    pub body_volume: f64, // m^3
    /// Depth intervals with non-unit density multipliers; depth outside
    /// every segment has multiplier 1.
    pub density_profile: Vec<DensitySegment>,
    pub mitigation: MitigationStrategy,
}

impl SwarmScenario {
    pub fn uniform(robot_count: f64) -> Self {
        SwarmScenario {
            robot_count,
            body_volume: 0.05, // 50 L
            density_profile: vec![],
            mitigation: MitigationStrategy::None,
        }
    }
}

impl Default for SwarmScenario {
    fn default() -> Self {
        SwarmScenario::uniform(0.0)
    }
}

/// Swarm coordination strategy that reshapes where and when robots absorb.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MitigationStrategy {
    None,
    /// Robots slow their pistons so each collects at most this power [W].
    PowerCap { per_robot: f64 },
    /// Split the source between two frequencies; robots harvest the high
    /// frequency while it still delivers at least `threshold` [W].
    SplitFrequency { threshold: f64 },
    /// Robots stay out of a depth interval; optionally the displaced
    /// robots raise the density elsewhere, conserving their number.
    AvoidPath { range: (f64, f64), redistribute: bool },
    /// Shallow robots synchronize: for `off_fraction` of the time they
    /// stop absorbing, giving deeper robots bursts of higher power.
    SyncDutyCycle {
        off_fraction: f64,
        shallow_range: (f64, f64),
    },
}

/// Numerical controls, all with working defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Numerics {
    /// Spatial integration step for field propagation [m].
    pub field_step: f64,
    /// Depth spacing of recorded profile samples [m].
    pub sample_spacing: f64,
    /// Piston ODE resolution.
    pub steps_per_cycle: u32,
    pub cycles: u32,
    /// Modal truncation order for the scattering reference computation.
    pub modal_terms: u32,
    /// Include scattering and boundary-layer dissipation in swarm
    /// attenuation (off by default: absorption dominates).
    pub include_passive: bool,
    /// Frequency grid for sweep outputs.
    pub frequency_points: u32,
    /// Depths reported by the frequency-sweep commands [m].
    pub depths: Vec<f64>,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            field_step: 1e-4,
            sample_spacing: 1e-3,
            steps_per_cycle: 400,
            cycles: 4,
            modal_terms: 6,
            include_passive: false,
            frequency_points: 61,
            depths: vec![0.02, 0.05, 0.10, 0.20],
        }
    }
}

/// A complete simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub robot: RobotDesign,
    pub fluid: FluidMedium,
    pub source: SourceSpec,
    pub path: TissuePath,
    pub swarm: SwarmScenario,
    pub numerics: Numerics,
}

impl Scenario {
    /// The reference scenario: table robot, 50 kPa source, 20 cm of soft
    /// tissue, no swarm.
    pub fn table() -> Self {
        Scenario {
            robot: RobotDesign::table(),
            fluid: FluidMedium::water_blood(),
            source: SourceSpec::table(),
            path: TissuePath::soft_tissue(0.2),
            swarm: SwarmScenario::default(),
            numerics: Numerics::default(),
        }
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::table()
    }
}

/// One violated invariant: where it is and what is wrong.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: &str, message: String) -> Self {
        Violation {
            path: path.to_string(),
            message,
        }
    }
}

fn require_positive(out: &mut Vec<Violation>, path: &str, value: f64) {
    if !(value > 0.0) {
        out.push(Violation::new(path, format!("must be > 0, got {value}")));
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(a.abs())
}

/// Check every type invariant of a scenario. Returns an empty list iff
/// the configuration is usable; violations are data, not failures.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut v = Vec::new();

    // piston geometry
    let g = &s.robot.piston;
    for (name, value) in [
        ("robot.piston.diameter", g.diameter),
        ("robot.piston.thickness", g.thickness),
        ("robot.piston.half_range", g.half_range),
        ("robot.piston.face_area", g.face_area),
        ("robot.piston.sliding_area", g.sliding_area),
        ("robot.piston.housing_diameter", g.housing_diameter),
        ("robot.piston.housing_depth", g.housing_depth),
    ] {
        require_positive(&mut v, name, value);
    }
    let expected_area = PI * (g.diameter / 2.0) * (g.diameter / 2.0);
    if !rel_close(g.face_area, expected_area, FIELD_CONSISTENCY) {
        v.push(Violation::new(
            "robot.piston.face_area",
            format!(
                "face_area {} does not equal pi (d/2)^2 = {}",
                g.face_area, expected_area
            ),
        ));
    }
    let expected_sliding = PI * g.diameter * g.thickness;
    if !rel_close(g.sliding_area, expected_sliding, FIELD_CONSISTENCY) {
        v.push(Violation::new(
            "robot.piston.sliding_area",
            format!(
                "sliding_area {} does not equal pi d tau = {}",
                g.sliding_area, expected_sliding
            ),
        ));
    }
    if !(2.0 * g.half_range + g.thickness < g.housing_depth) {
        v.push(Violation::new(
            "robot.piston.housing_depth",
            format!(
                "travel plus thickness {} must fit inside housing depth {}",
                2.0 * g.half_range + g.thickness,
                g.housing_depth
            ),
        ));
    }

    // spring
    let sp = &s.robot.spring;
    require_positive(&mut v, "robot.spring.spring_constant", sp.spring_constant);
    if sp.overlap_area_bound
        > sp.max_perp_overlap * sp.max_parallel_overlap * (1.0 + FIELD_CONSISTENCY)
    {
        v.push(Violation::new(
            "robot.spring.overlap_area_bound",
            format!(
                "overlap area bound {} exceeds L_max*h_max = {}",
                sp.overlap_area_bound,
                sp.max_perp_overlap * sp.max_parallel_overlap
            ),
        ));
    }

    // fluid
    let fl = &s.fluid;
    for (name, value) in [
        ("fluid.dynamic_viscosity", fl.dynamic_viscosity),
        ("fluid.bulk_viscosity", fl.bulk_viscosity),
        ("fluid.temperature", fl.temperature),
        ("fluid.thermal_conductivity", fl.thermal_conductivity),
        ("fluid.heat_capacity_cp", fl.heat_capacity_cp),
        ("fluid.density", fl.density),
        ("fluid.sound_speed", fl.sound_speed),
    ] {
        require_positive(&mut v, name, value);
    }
    if fl.heat_capacity_ratio < 1.0 {
        v.push(Violation::new(
            "fluid.heat_capacity_ratio",
            format!("must be >= 1, got {}", fl.heat_capacity_ratio),
        ));
    }

    // path
    if s.path.segments.is_empty() {
        v.push(Violation::new("path.segments", "path is empty".to_string()));
    }
    for (i, (medium, length)) in s.path.segments.iter().enumerate() {
        if !(*length > 0.0) {
            v.push(Violation::new(
                &format!("path.segments.{i}.length"),
                format!("must be > 0, got {length}"),
            ));
        }
        if medium.absorption < 0.0 {
            v.push(Violation::new(
                &format!("path.segments.{i}.medium.absorption"),
                format!("must be >= 0, got {}", medium.absorption),
            ));
        }
        require_positive(
            &mut v,
            &format!("path.segments.{i}.medium.density"),
            medium.density,
        );
        require_positive(
            &mut v,
            &format!("path.segments.{i}.medium.sound_speed"),
            medium.sound_speed,
        );
    }
    for (i, t) in s.path.interface_energy_transmission.iter().enumerate() {
        if !(*t > 0.0 && *t <= 1.0) {
            v.push(Violation::new(
                &format!("path.interface_energy_transmission.{i}"),
                format!("must be in (0, 1], got {t}"),
            ));
        }
    }
    if s.path.interface_energy_transmission.len() + 1 != s.path.segments.len()
        && !s.path.segments.is_empty()
    {
        v.push(Violation::new(
            "path.interface_energy_transmission",
            format!(
                "{} segments require {} interface factors, got {}",
                s.path.segments.len(),
                s.path.segments.len() - 1,
                s.path.interface_energy_transmission.len()
            ),
        ));
    }

    // source
    let src = &s.source;
    if src.intensity > SAFETY_INTENSITY {
        v.push(Violation::new(
            "source.intensity",
            format!(
                "{} W/m^2 exceeds the {} W/m^2 safety limit",
                src.intensity, SAFETY_INTENSITY
            ),
        ));
    }
    require_positive(&mut v, "source.intensity", src.intensity);
    if !(0.0..1.0).contains(&src.reflection_loss_fraction) {
        v.push(Violation::new(
            "source.reflection_loss_fraction",
            format!("must be in [0, 1), got {}", src.reflection_loss_fraction),
        ));
    }
    let share_sum: f64 = src.frequencies.iter().map(|b| b.share).sum();
    if share_sum > 1.0 + 1e-12 {
        v.push(Violation::new(
            "source.frequencies",
            format!("intensity shares sum to {share_sum}, must not exceed 1"),
        ));
    }
    if src.frequencies.is_empty() {
        v.push(Violation::new(
            "source.frequencies",
            "at least one frequency band is required".to_string(),
        ));
    }
    for (i, band) in src.frequencies.iter().enumerate() {
        if band.frequency < FREQUENCY_MIN || band.frequency > FREQUENCY_MAX {
            v.push(Violation::new(
                &format!("source.frequencies.{i}.frequency"),
                format!(
                    "{} Hz outside the supported {}-{} Hz band",
                    band.frequency, FREQUENCY_MIN, FREQUENCY_MAX
                ),
            ));
        }
        if !(0.0..=1.0).contains(&band.share) {
            v.push(Violation::new(
                &format!("source.frequencies.{i}.share"),
                format!("must be in [0, 1], got {}", band.share),
            ));
        }
        if let Some(p) = band.pressure {
            // amplitude-loss consistency: pinned table values are rounded
            let medium = s
                .path
                .segments
                .first()
                .map(|(m, _)| m.clone())
                .unwrap_or_else(TissueMedium::soft_tissue);
            let computed = (1.0 - src.reflection_loss_fraction)
                * (2.0 * medium.impedance() * src.intensity * band.share).sqrt();
            if computed > 0.0 && !rel_close(p, computed, PINNED_PRESSURE_TOLERANCE) {
                v.push(Violation::new(
                    &format!("source.frequencies.{i}.pressure"),
                    format!(
                        "pinned pressure {p} Pa is inconsistent with the \
                         amplitude-loss value {computed:.1} Pa"
                    ),
                ));
            }
        }
    }

    // robot
    let r = &s.robot;
    require_positive(&mut v, "robot.radius", r.radius);
    if !(r.duty_cycle > 0.0 && r.duty_cycle <= 1.0) {
        v.push(Violation::new(
            "robot.duty_cycle",
            format!("must be in (0, 1], got {}", r.duty_cycle),
        ));
    }
    if !(r.surface_fraction_moving > 0.0 && r.surface_fraction_moving < 1.0) {
        v.push(Violation::new(
            "robot.surface_fraction_moving",
            format!("must be in (0, 1), got {}", r.surface_fraction_moving),
        ));
    }
    if r.drag_factor < 0.0 {
        v.push(Violation::new(
            "robot.drag_factor",
            format!("must be >= 0, got {}", r.drag_factor),
        ));
    }
    if r.sliding_drag_coefficient < 0.0 {
        v.push(Violation::new(
            "robot.sliding_drag_coefficient",
            format!("must be >= 0, got {}", r.sliding_drag_coefficient),
        ));
    }
    for (i, band) in src.frequencies.iter().enumerate() {
        let medium = s.path.medium_at(0.0);
        let kr = medium.wave_number(band.frequency) * r.radius;
        if kr >= MAX_KR {
            v.push(Violation::new(
                &format!("source.frequencies.{i}.frequency"),
                format!(
                    "k*r = {kr:.3} at {} Hz violates the long-wavelength \
                     assumption (must be < {MAX_KR})",
                    band.frequency
                ),
            ));
        }
    }

    // swarm
    let sw = &s.swarm;
    if sw.robot_count < 0.0 {
        v.push(Violation::new(
            "swarm.robot_count",
            format!("must be >= 0, got {}", sw.robot_count),
        ));
    }
    require_positive(&mut v, "swarm.body_volume", sw.body_volume);
    for (i, seg) in sw.density_profile.iter().enumerate() {
        if seg.multiplier < 0.0 {
            v.push(Violation::new(
                &format!("swarm.density_profile.{i}.multiplier"),
                format!("must be >= 0, got {}", seg.multiplier),
            ));
        }
        if seg.to <= seg.from {
            v.push(Violation::new(
                &format!("swarm.density_profile.{i}"),
                format!("empty or inverted interval [{}, {}]", seg.from, seg.to),
            ));
        }
    }

    // mitigation
    let total = s.path.total_length();
    match &sw.mitigation {
        MitigationStrategy::None => {}
        MitigationStrategy::PowerCap { per_robot } => {
            require_positive(&mut v, "mitigation.per_robot", *per_robot);
        }
        MitigationStrategy::SplitFrequency { threshold } => {
            require_positive(&mut v, "mitigation.threshold", *threshold);
            if src.frequencies.len() != 2 {
                v.push(Violation::new(
                    "source.frequencies",
                    format!(
                        "split-frequency mitigation requires two bands, got {}",
                        src.frequencies.len()
                    ),
                ));
            }
        }
        MitigationStrategy::AvoidPath { range, .. } => {
            if !(range.0 >= 0.0 && range.1 <= total && range.0 <= range.1) {
                v.push(Violation::new(
                    "mitigation.range",
                    format!(
                        "avoided range [{}, {}] must lie within the {} m path",
                        range.0, range.1, total
                    ),
                ));
            }
        }
        MitigationStrategy::SyncDutyCycle {
            off_fraction,
            shallow_range,
        } => {
            if !(0.0..1.0).contains(off_fraction) {
                v.push(Violation::new(
                    "mitigation.off_fraction",
                    format!("must be in [0, 1), got {off_fraction}"),
                ));
            }
            if !(shallow_range.0 >= 0.0
                && shallow_range.1 <= total
                && shallow_range.0 <= shallow_range.1)
            {
                v.push(Violation::new(
                    "mitigation.shallow_range",
                    format!(
                        "shallow range [{}, {}] must lie within the {} m path",
                        shallow_range.0, shallow_range.1, total
                    ),
                ));
            }
        }
    }

    // numerics
    let n = &s.numerics;
    require_positive(&mut v, "numerics.field_step", n.field_step);
    require_positive(&mut v, "numerics.sample_spacing", n.sample_spacing);
    if n.steps_per_cycle < 200 {
        v.push(Violation::new(
            "numerics.steps_per_cycle",
            format!("must be >= 200, got {}", n.steps_per_cycle),
        ));
    }
    if n.cycles < 2 {
        v.push(Violation::new(
            "numerics.cycles",
            format!("must be >= 2, got {}", n.cycles),
        ));
    }

    v
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    robot: Option<RobotFile>,
    source: Option<SourceFile>,
    path: Option<PathFile>,
    swarm: Option<SwarmFile>,
    mitigation: Option<MitigationFile>,
    numerics: Option<NumericsFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotFile {
    radius: Quantity,
    num_pistons: u32,
    duty_cycle: f64,
    surface_fraction_moving: f64,
    drag_factor: f64,
    sliding_drag_coefficient: Quantity,
    piston: PistonFile,
    #[serde(default)]
    spring: Option<SpringFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PistonFile {
    diameter: Quantity,
    thickness: Quantity,
    half_range: Quantity,
    housing_diameter: Quantity,
    housing_depth: Quantity,
    #[serde(default)]
    face_area: Option<Quantity>,
    #[serde(default)]
    sliding_area: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpringFile {
    spring_constant: Quantity,
    max_perp_overlap: Quantity,
    max_parallel_overlap: Quantity,
    overlap_area_bound: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceFile {
    intensity: Quantity,
    reflection_loss_fraction: f64,
    frequencies: Vec<BandFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandFile {
    frequency: Quantity,
    share: f64,
    #[serde(default)]
    pressure: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathFile {
    segments: Vec<SegmentFile>,
    #[serde(default)]
    interface_energy_transmission: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    medium: MediumFile,
    length: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MediumFile {
    name: String,
    absorption: Quantity,
    density: Quantity,
    sound_speed: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwarmFile {
    robot_count: f64,
    body_volume: Quantity,
    #[serde(default)]
    density_profile: Vec<DensitySegmentFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensitySegmentFile {
    from: Quantity,
    to: Quantity,
    multiplier: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum MitigationFile {
    None,
    PowerCap {
        per_robot: Quantity,
    },
    SplitFrequency {
        threshold: Quantity,
    },
    AvoidPath {
        from: Quantity,
        to: Quantity,
        #[serde(default)]
        redistribute: bool,
    },
    SyncDutyCycle {
        off_fraction: f64,
        shallow_from: Quantity,
        shallow_to: Quantity,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumericsFile {
    field_step: Option<Quantity>,
    sample_spacing: Option<Quantity>,
    steps_per_cycle: Option<u32>,
    cycles: Option<u32>,
    modal_terms: Option<u32>,
    include_passive: Option<bool>,
    frequency_points: Option<u32>,
    depths: Option<Vec<Quantity>>,
}

impl Scenario {
    /// Parse a scenario from JSON text. Unknown keys and unknown units are
    /// errors; missing sections fall back to the reference defaults.
    pub fn from_json_str(text: &str) -> Result<Scenario> {
        let file: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| SimError::Scenario(format!("invalid scenario file: {e}")))?;
        Scenario::from_file(file)
    }

    /// Parse a scenario from an already-loaded JSON value (used after
    /// applying command-line overrides).
    pub fn from_json_value(value: serde_json::Value) -> Result<Scenario> {
        let file: ScenarioFile = serde_json::from_value(value)
            .map_err(|e| SimError::Scenario(format!("invalid scenario file: {e}")))?;
        Scenario::from_file(file)
    }

    fn from_file(file: ScenarioFile) -> Result<Scenario> {
        let mut scenario = Scenario::table();

        if let Some(r) = file.robot {
            let p = r.piston;
            let mut piston = PistonGeometry::new(
                to_si(&p.diameter, Dimension::Length)?,
                to_si(&p.thickness, Dimension::Length)?,
                to_si(&p.half_range, Dimension::Length)?,
                to_si(&p.housing_diameter, Dimension::Length)?,
                to_si(&p.housing_depth, Dimension::Length)?,
            );
            if let Some(a) = p.face_area {
                piston.face_area = to_si(&a, Dimension::Area)?;
            }
            if let Some(a) = p.sliding_area {
                piston.sliding_area = to_si(&a, Dimension::Area)?;
            }
            let spring = match r.spring {
                Some(sf) => SpringSpec {
                    spring_constant: to_si(&sf.spring_constant, Dimension::SpringConstant)?,
                    max_perp_overlap: to_si(&sf.max_perp_overlap, Dimension::Length)?,
                    max_parallel_overlap: to_si(&sf.max_parallel_overlap, Dimension::Length)?,
                    overlap_area_bound: to_si(&sf.overlap_area_bound, Dimension::Area)?,
                },
                None => SpringSpec::default(),
            };
            scenario.robot = RobotDesign {
                radius: to_si(&r.radius, Dimension::Length)?,
                piston,
                spring,
                num_pistons: r.num_pistons,
                duty_cycle: r.duty_cycle,
                surface_fraction_moving: r.surface_fraction_moving,
                drag_factor: r.drag_factor,
                sliding_drag_coefficient: to_si(
                    &r.sliding_drag_coefficient,
                    Dimension::SlidingDrag,
                )?,
            };
        }

        if let Some(src) = file.source {
            let mut bands = Vec::with_capacity(src.frequencies.len());
            for b in src.frequencies {
                bands.push(FrequencyBand {
                    frequency: to_si(&b.frequency, Dimension::Frequency)?,
                    share: b.share,
                    pressure: b
                        .pressure
                        .map(|q| to_si(&q, Dimension::Pressure))
                        .transpose()?,
                });
            }
            scenario.source = SourceSpec {
                intensity: to_si(&src.intensity, Dimension::Intensity)?,
                reflection_loss_fraction: src.reflection_loss_fraction,
                frequencies: bands,
            };
        }

        if let Some(p) = file.path {
            let mut segments = Vec::with_capacity(p.segments.len());
            for seg in p.segments {
                segments.push((
                    TissueMedium {
                        name: seg.medium.name,
                        absorption: to_si(&seg.medium.absorption, Dimension::Absorption)?,
                        density: to_si(&seg.medium.density, Dimension::Density)?,
                        sound_speed: to_si(&seg.medium.sound_speed, Dimension::Speed)?,
                    },
                    to_si(&seg.length, Dimension::Length)?,
                ));
            }
            scenario.path = TissuePath {
                segments,
                interface_energy_transmission: p.interface_energy_transmission,
            };
        }

        if let Some(sw) = file.swarm {
            let mut profile = Vec::with_capacity(sw.density_profile.len());
            for seg in sw.density_profile {
                profile.push(DensitySegment {
                    from: to_si(&seg.from, Dimension::Length)?,
                    to: to_si(&seg.to, Dimension::Length)?,
                    multiplier: seg.multiplier,
                });
            }
            scenario.swarm = SwarmScenario {
                robot_count: sw.robot_count,
                body_volume: to_si(&sw.body_volume, Dimension::Volume)?,
                density_profile: profile,
                mitigation: MitigationStrategy::None,
            };
        }

        if let Some(m) = file.mitigation {
            scenario.swarm.mitigation = match m {
                MitigationFile::None => MitigationStrategy::None,
                MitigationFile::PowerCap { per_robot } => MitigationStrategy::PowerCap {
                    per_robot: to_si(&per_robot, Dimension::Power)?,
                },
                MitigationFile::SplitFrequency { threshold } => {
                    MitigationStrategy::SplitFrequency {
                        threshold: to_si(&threshold, Dimension::Power)?,
                    }
                }
                MitigationFile::AvoidPath {
                    from,
                    to,
                    redistribute,
                } => MitigationStrategy::AvoidPath {
                    range: (
                        to_si(&from, Dimension::Length)?,
                        to_si(&to, Dimension::Length)?,
                    ),
                    redistribute,
                },
                MitigationFile::SyncDutyCycle {
                    off_fraction,
                    shallow_from,
                    shallow_to,
                } => MitigationStrategy::SyncDutyCycle {
                    off_fraction,
                    shallow_range: (
                        to_si(&shallow_from, Dimension::Length)?,
                        to_si(&shallow_to, Dimension::Length)?,
                    ),
                },
            };
        }

        if let Some(n) = file.numerics {
            let d = &mut scenario.numerics;
            if let Some(q) = n.field_step {
                d.field_step = to_si(&q, Dimension::Length)?;
            }
            if let Some(q) = n.sample_spacing {
                d.sample_spacing = to_si(&q, Dimension::Length)?;
            }
            if let Some(x) = n.steps_per_cycle {
                d.steps_per_cycle = x;
            }
            if let Some(x) = n.cycles {
                d.cycles = x;
            }
            if let Some(x) = n.modal_terms {
                d.modal_terms = x;
            }
            if let Some(x) = n.include_passive {
                d.include_passive = x;
            }
            if let Some(x) = n.frequency_points {
                d.frequency_points = x;
            }
            if let Some(qs) = n.depths {
                let mut depths = Vec::with_capacity(qs.len());
                for q in &qs {
                    depths.push(to_si(q, Dimension::Length)?);
                }
                d.depths = depths;
            }
        }

        Ok(scenario)
    }
}
