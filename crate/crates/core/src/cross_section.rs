//! Per-robot acoustic cross sections: piston absorption, long-wavelength
//! scattering (closed form plus a modal reference computation), and a
//! boundary-layer dissipation estimate.
//!
//! A cross section is the equivalent area whose intercepted incident flux
//! equals the power the robot removes from the wave.

use crate::error::{Result, SimError};
use crate::piston::{drive_parameter, optimal_load, piston_power};
use crate::scenario::{AcousticMedium, FluidMedium, RobotDesign, TissueMedium, MAX_KR};
use crate::special::{
    gauss_legendre, legendre_p, spherical_bessel_j, spherical_bessel_j_prime, spherical_bessel_y,
    spherical_bessel_y_prime,
};
use crate::tissue::flux_from_pressure;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Uniform surface response: the pistons' average motion spread over the
/// sphere, radial velocity -beta p(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceResponse {
    /// beta = f_surface A / k_total [m/(s Pa)].
    pub beta: f64,
    /// Dimensionless form beta c rho.
    pub beta_c_rho: f64,
}

impl SurfaceResponse {
    /// Pistons locked at their limits: a hard sphere, beta = 0.
    pub fn locked() -> Self {
        SurfaceResponse {
            beta: 0.0,
            beta_c_rho: 0.0,
        }
    }
}

/// Surface response of a robot with the given total piston drag.
pub fn surface_response(
    robot: &RobotDesign,
    k_total: f64,
    medium: &impl AcousticMedium,
) -> SurfaceResponse {
    debug_assert!(k_total > 0.0);
    let beta = robot.surface_fraction_moving * robot.piston.face_area / k_total;
    SurfaceResponse {
        beta,
        beta_c_rho: beta * medium.impedance(),
    }
}

/// Whether the sphere's center of mass rides with the wave or is held
/// fixed; a fixed sphere scatters slightly more.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterMotion {
    Free,
    Fixed,
}

/// Long-wavelength scattering cross section of the responding sphere.
///
/// Free center: pi r^2 (4 (kr)^2 (bcr)^2 + 4/9 (kr)^4 (1 - 12 (bcr)^2)).
/// Holding the center fixed raises the rigid-limit coefficient from 4/9
/// to 7/9 (the beta cross term is unchanged).
pub fn scattering_cross_section(
    radius: f64,
    wave_number: f64,
    beta_c_rho: f64,
    center: CenterMotion,
) -> Result<f64> {
    let kr = wave_number * radius;
    if kr >= MAX_KR {
        return Err(SimError::Validity(format!(
            "k*r = {kr:.3} is outside the long-wavelength limit (< {MAX_KR})"
        )));
    }
    let bcr2 = beta_c_rho * beta_c_rho;
    let kr2 = kr * kr;
    let quartic_coeff = match center {
        CenterMotion::Free => 4.0 / 9.0,
        CenterMotion::Fixed => 7.0 / 9.0,
    };
    Ok(PI
        * radius
        * radius
        * (4.0 * kr2 * bcr2 + kr2 * kr2 * (quartic_coeff - (16.0 / 3.0) * bcr2)))
}

/// Modal coefficients A_m of the scattered wave, from matching the
/// surface boundary condition mode by mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalCoefficients {
    /// A_0 ..= A_{m_max}.
    pub coefficients: Vec<Complex64>,
    pub truncation: usize,
}

impl ModalCoefficients {
    pub fn a0(&self) -> Complex64 {
        self.coefficients[0]
    }

    pub fn a1(&self) -> Complex64 {
        self.coefficients[1]
    }
}

/// Match the boundary condition
///   -(i/(omega rho)) dp/dr = -beta p_inc + v_inc cos(theta)   at r = a
/// for incident wave p0 exp(ikz) expanded in modes F_m = i^m (2m+1):
///   A_m = (-i bcr F_m j_m(ka) + i delta_{m,1} - F_m j_m'(ka)) / h_m'(ka).
/// The delta term is the sphere riding with the incident fluid velocity;
/// a fixed center drops it.
pub fn modal_coefficients(
    ka: f64,
    beta_c_rho: f64,
    m_max: usize,
    center: CenterMotion,
) -> ModalCoefficients {
    let mut coefficients = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let f_m = Complex64::i().powu(m as u32) * (2 * m + 1) as f64;
        let jm = spherical_bessel_j(m, ka);
        let jmp = spherical_bessel_j_prime(m, ka);
        let hmp = Complex64::new(jmp, spherical_bessel_y_prime(m, ka));
        let mut numerator = -Complex64::i() * beta_c_rho * f_m * jm - f_m * jmp;
        if m == 1 && center == CenterMotion::Free {
            numerator += Complex64::i();
        }
        coefficients.push(numerator / hmp);
    }
    ModalCoefficients {
        coefficients,
        truncation: m_max,
    }
}

/// Scattered power through a sphere of radius `integration_radius`,
/// divided by the incident flux: numerically integrates the scattered
/// flux (1/2) Re(v_r p*) over the sphere with Gauss-Legendre quadrature.
fn modal_flux_integral(
    coeffs: &ModalCoefficients,
    wave_number: f64,
    integration_radius: f64,
) -> f64 {
    let m_max = coeffs.truncation;
    let kr = wave_number * integration_radius;
    let n_nodes = (2 * (m_max + 1)).max(32);
    let (nodes, weights) = gauss_legendre(n_nodes);

    // h_m(kR) and h_m'(kR) once per mode
    let mut h = Vec::with_capacity(m_max + 1);
    let mut hp = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        h.push(Complex64::new(
            spherical_bessel_j(m, kr),
            spherical_bessel_y(m, kr),
        ));
        hp.push(Complex64::new(
            spherical_bessel_j_prime(m, kr),
            spherical_bessel_y_prime(m, kr),
        ));
    }

    // flux = (1/2) Re(v_r p*) with v_r = -(i/(rho c)) sum A_m P_m h_m'(kR);
    // the rho c factors cancel against the incident flux p0^2/(2 rho c).
    let mut integral = 0.0;
    for (mu, w) in nodes.iter().zip(&weights) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for m in 0..=m_max {
            let pm = legendre_p(m, *mu);
            p += coeffs.coefficients[m] * pm * h[m];
            dp += coeffs.coefficients[m] * pm * hp[m];
        }
        integral += w * (-Complex64::i() * dp * p.conj()).re;
    }
    2.0 * PI * integration_radius * integration_radius * integral
}

/// Scattering cross section from the full modal expansion, evaluated by
/// numerically integrating the scattered flux over a far sphere. Serves
/// as the independent check on [`scattering_cross_section`].
///
/// The flux integral of a non-attenuated outgoing wave is independent of
/// the integration radius; this is verified here by doubling the radius,
/// and the truncation is verified by doubling `m_max`.
pub fn modal_scattering_cross_section(
    radius: f64,
    wave_number: f64,
    beta: f64,
    medium: &impl AcousticMedium,
    m_max: usize,
) -> Result<f64> {
    if m_max < 2 {
        return Err(SimError::Domain(format!(
            "m_max must be >= 2, got {m_max}"
        )));
    }
    let ka = wave_number * radius;
    let bcr = beta * medium.impedance();
    // integrate where kR is order one: safely outside the sphere but free
    // of the near-field cancellations of very small kR
    let integration_radius = (1.0 / wave_number).max(10.0 * radius);

    let sigma = |order: usize, r_int: f64| {
        let coeffs = modal_coefficients(ka, bcr, order, CenterMotion::Free);
        modal_flux_integral(&coeffs, wave_number, r_int)
    };

    let base = sigma(m_max, integration_radius);
    let refined = sigma(2 * m_max, integration_radius);
    if (refined - base).abs() > 1e-3 * refined.abs() {
        return Err(SimError::Truncation(format!(
            "modal sum not converged at m_max = {m_max}: {base:.6e} vs \
             {refined:.6e} at m_max = {}",
            2 * m_max
        )));
    }
    let doubled = sigma(m_max, 2.0 * integration_radius);
    if (doubled - base).abs() > 1e-3 * base.abs() {
        return Err(SimError::Truncation(format!(
            "flux integral depends on the integration radius: {base:.6e} vs {doubled:.6e}"
        )));
    }
    Ok(base)
}

/// Viscous and thermal boundary-layer thicknesses at the robot surface:
/// sqrt(2 eta / (rho w)) and sqrt(2 k_th / (rho c_p w)).
pub fn boundary_layer_lengths(frequency: f64, fluid: &FluidMedium) -> (f64, f64) {
    debug_assert!(frequency > 0.0);
    let omega = 2.0 * PI * frequency;
    let viscous = (2.0 * fluid.dynamic_viscosity / (fluid.density * omega)).sqrt();
    let thermal =
        (2.0 * fluid.thermal_conductivity / (fluid.density * fluid.heat_capacity_cp * omega))
            .sqrt();
    (viscous, thermal)
}

/// Boundary-layer dissipation estimate, 3 pi w delta_v r^2 / c.
///
/// The surface does not follow the wave's tangential motion, leaving a
/// slip of amplitude (3/2) v sin(theta) that dissipates at the rate
/// rho w delta_v |v_t|^2 / 4 per unit area; integrating over the sphere
/// and dividing by the incident flux gives the form above. The thermal
/// contribution is two orders of magnitude smaller in water-like fluids
/// and is omitted.
pub fn dissipation_cross_section(radius: f64, frequency: f64, fluid: &FluidMedium) -> f64 {
    let omega = 2.0 * PI * frequency;
    let (delta_v, _) = boundary_layer_lengths(frequency, fluid);
    3.0 * PI * omega * delta_v * radius * radius / fluid.sound_speed
}

/// Absorption cross section of a robot: the total piston dissipation
/// (load plus friction) per unit incident flux, at the optimal load.
///
/// For lambda <= 2 this is pressure-independent,
/// duty N A^2 rho c / (2 k_f); for lambda > 2 the total absorbed power is
/// a w A p / 2 per piston, so the cross section falls off as 1/p.
pub fn absorption_cross_section(
    robot: &RobotDesign,
    k_internal: f64,
    pressure: f64,
    frequency: f64,
    medium: &impl AcousticMedium,
) -> f64 {
    let pistons = robot.num_pistons as f64 * robot.duty_cycle;
    let lambda = if pressure > 0.0 {
        drive_parameter(pressure, frequency, &robot.piston, k_internal)
    } else {
        0.0
    };
    let area = robot.piston.face_area;
    if lambda <= 2.0 {
        pistons * area * area * medium.impedance() / (2.0 * k_internal)
    } else {
        let a_omega = robot.piston.half_range * 2.0 * PI * frequency;
        pistons * a_omega * area * medium.impedance() / pressure
    }
}

/// The three loss channels for one robot, plus their sum and the
/// geometric reference pi r^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSectionBreakdown {
    pub absorption: f64,
    pub scattering: f64,
    pub boundary_dissipation: f64,
    pub total: f64,
    pub geometric: f64,
}

/// Assemble the cross-section breakdown for a robot in a plane wave of the
/// given local pressure. `pistons_locked` models a robot not collecting
/// energy: no absorption and a hard-sphere (beta = 0) surface.
pub fn cross_section_breakdown(
    robot: &RobotDesign,
    fluid: &FluidMedium,
    medium: &TissueMedium,
    pressure: f64,
    frequency: f64,
    pistons_locked: bool,
) -> Result<CrossSectionBreakdown> {
    if robot.radius == 0.0 {
        return Ok(CrossSectionBreakdown {
            absorption: 0.0,
            scattering: 0.0,
            boundary_dissipation: 0.0,
            total: 0.0,
            geometric: 0.0,
        });
    }
    let k = medium.wave_number(frequency);
    let k_internal = crate::piston::internal_drag(&robot.piston, robot, fluid);
    let (absorption, response) = if pistons_locked {
        (0.0, SurfaceResponse::locked())
    } else {
        let lambda = drive_parameter(pressure, frequency, &robot.piston, k_internal);
        let k_total = k_internal * (1.0 + optimal_load(lambda));
        (
            absorption_cross_section(robot, k_internal, pressure, frequency, medium),
            surface_response(robot, k_total, medium),
        )
    };
    let scattering =
        scattering_cross_section(robot.radius, k, response.beta_c_rho, CenterMotion::Free)?;
    let boundary_dissipation = dissipation_cross_section(robot.radius, frequency, fluid);
    Ok(CrossSectionBreakdown {
        absorption,
        scattering,
        boundary_dissipation,
        total: absorption + scattering + boundary_dissipation,
        geometric: PI * robot.radius * robot.radius,
    })
}

/// Consistency route for the absorption cross section: total piston power
/// over incident flux, used by tests against the closed form.
pub fn absorption_from_power(
    robot: &RobotDesign,
    k_internal: f64,
    pressure: f64,
    frequency: f64,
    medium: &impl AcousticMedium,
) -> f64 {
    if pressure <= 0.0 {
        return 0.0;
    }
    let power = piston_power(pressure, frequency, &robot.piston, k_internal);
    robot.num_pistons as f64 * robot.duty_cycle * power.total
        / flux_from_pressure(pressure, medium)
}
