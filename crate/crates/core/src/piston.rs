//! Piston dynamics and extracted power.
//!
//! A piston at these scales moves at terminal velocity: drag instantly
//! balances the applied acoustic force. With drive pressure -p cos(wt),
//! normalized position X = x/a and time tau = wt, the motion obeys
//! dX/dtau = lambda/(1 + k_ratio) cos(tau), clamped to |X| <= 1.
//! The drive parameter lambda = pA/(a w k_f) compares
//! acoustic force to internal drag; for lambda > 2 an optimally loaded
//! piston reaches its stops. The piecewise power law and the time-stepping
//! simulation here are two independent routes to the same cycle-averaged
//! power.

use crate::error::{Result, SimError};
use crate::scenario::{FluidMedium, PistonGeometry, RobotDesign};
use std::f64::consts::PI;

/// Drag coefficients acting on one piston [kg/s].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragCoefficients {
    /// Viscous drag from the fluid, g d eta.
    pub viscous: f64,
    /// Sliding friction, k_sliding times the sliding area (piston edge
    /// plus spring sheet overlap bound).
    pub sliding: f64,
    /// Internal drag k_f = viscous + sliding.
    pub internal: f64,
    /// Load drag transferring power to the robot's mechanisms.
    pub load: f64,
    /// Total drag k_f + k_load.
    pub total: f64,
}

/// Drag coefficients for a piston in a robot, with the load expressed as
/// a multiple `load_ratio` of the internal drag.
pub fn drag_coefficients(
    geom: &PistonGeometry,
    robot: &RobotDesign,
    fluid: &FluidMedium,
    load_ratio: f64,
) -> DragCoefficients {
    let viscous = robot.drag_factor * geom.diameter * fluid.dynamic_viscosity;
    let sliding = robot.sliding_drag_coefficient
        * (geom.sliding_area + robot.spring.overlap_area_bound);
    let internal = viscous + sliding;
    let load = load_ratio * internal;
    DragCoefficients {
        viscous,
        sliding,
        internal,
        load,
        total: internal + load,
    }
}

/// Internal drag k_f of one piston (viscous plus sliding).
pub fn internal_drag(geom: &PistonGeometry, robot: &RobotDesign, fluid: &FluidMedium) -> f64 {
    drag_coefficients(geom, robot, fluid, 0.0).internal
}

/// Dimensionless drive parameter lambda = p A / (a omega k_f).
pub fn drive_parameter(pressure: f64, frequency: f64, geom: &PistonGeometry, k_internal: f64) -> f64 {
    debug_assert!(frequency > 0.0 && k_internal > 0.0);
    pressure * geom.face_area / (geom.half_range * 2.0 * PI * frequency * k_internal)
}

/// Drive conditions of a piston at one point in the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveState {
    pub drive_parameter: f64,
    pub load_ratio: f64,
    pub angular_frequency: f64,
    pub pressure_amplitude: f64,
}

impl DriveState {
    pub fn new(pressure: f64, frequency: f64, geom: &PistonGeometry, k_internal: f64) -> Self {
        let lambda = drive_parameter(pressure, frequency, geom, k_internal);
        DriveState {
            drive_parameter: lambda,
            load_ratio: optimal_load(lambda),
            angular_frequency: 2.0 * PI * frequency,
            pressure_amplitude: pressure,
        }
    }
}

/// Load ratio k_load/k_f that maximizes delivered power: 1 while the
/// motion stays sinusoidal (lambda <= 2), else lambda - 1, the smallest
/// load that keeps the piston off its stops. The true optimum for
/// lambda > 2 is slightly below lambda - 1 but gains less than 3%.
pub fn optimal_load(drive: f64) -> f64 {
    debug_assert!(drive >= 0.0);
    if drive <= 2.0 {
        1.0
    } else {
        drive - 1.0
    }
}

/// Cycle-averaged power from one piston at the optimal load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PistonPower {
    /// Power delivered to the load [W].
    pub load: f64,
    /// Total absorbed power, load plus internal friction [W].
    pub total: f64,
    /// Load ratio used.
    pub load_ratio: f64,
}

/// Piecewise power law for an optimally loaded piston:
/// A^2 p^2 / (8 k_f) while sinusoidal, a w (A p - a w k_f)/2 when the
/// stops limit the motion. The branches agree at lambda = 2.
pub fn piston_power(
    pressure: f64,
    frequency: f64,
    geom: &PistonGeometry,
    k_internal: f64,
) -> PistonPower {
    let lambda = drive_parameter(pressure, frequency, geom, k_internal);
    let load_ratio = optimal_load(lambda);
    let load = if lambda <= 2.0 {
        let ap = geom.face_area * pressure;
        ap * ap / (8.0 * k_internal)
    } else {
        let a_omega = geom.half_range * 2.0 * PI * frequency;
        0.5 * a_omega * (geom.face_area * pressure - a_omega * k_internal)
    };
    PistonPower {
        load,
        total: load * (1.0 + load_ratio) / load_ratio,
        load_ratio,
    }
}

/// Full peak-to-peak travel at the optimal load:
/// min(2a, 2a lambda / (1 + k_ratio)).
pub fn displacement_range(
    pressure: f64,
    frequency: f64,
    geom: &PistonGeometry,
    k_internal: f64,
) -> f64 {
    let lambda = drive_parameter(pressure, frequency, geom, k_internal);
    let amplitude = lambda / (1.0 + optimal_load(lambda));
    2.0 * geom.half_range * amplitude.min(1.0)
}

/// Power collected by a whole robot: pistons times duty cycle times the
/// per-piston load power at the optimal load.
pub fn robot_power(robot: &RobotDesign, pressure: f64, frequency: f64, fluid: &FluidMedium) -> f64 {
    let k_internal = internal_drag(&robot.piston, robot, fluid);
    robot.num_pistons as f64
        * robot.duty_cycle
        * piston_power(pressure, frequency, &robot.piston, k_internal).load
}

/// Result of time-stepping the clamped piston ODE.
#[derive(Debug, Clone, PartialEq)]
pub struct PistonTrajectory {
    /// (normalized time tau, normalized position X) at every step.
    pub samples: Vec<(f64, f64)>,
    /// Cycle-averaged power to the load over the final cycle [W].
    pub mean_load_power: f64,
    /// Cycle-averaged total dissipated power over the final cycle [W].
    pub mean_total_power: f64,
    /// Fraction of the final cycle spent pinned at a stop.
    pub stopped_fraction: f64,
}

/// Integrator state: position plus the running integral of cos^2(tau)
/// over time spent moving (which carries both energies).
#[derive(Clone, Copy)]
struct OdeState {
    x: f64,
    cos2_integral: f64,
}

/// One classical RK4 step of dX/dtau = c cos(tau), de/dtau = cos^2(tau)
/// over [tau, tau + h].
fn rk4_step(state: OdeState, tau: f64, h: f64, c: f64) -> OdeState {
    let fx = |t: f64| c * t.cos();
    let fe = |t: f64| {
        let ct = t.cos();
        ct * ct
    };
    let (k1, e1) = (fx(tau), fe(tau));
    let (k2, e2) = (fx(tau + 0.5 * h), fe(tau + 0.5 * h));
    let (k4, e4) = (fx(tau + h), fe(tau + h));
    OdeState {
        x: state.x + h / 6.0 * (k1 + 4.0 * k2 + k4),
        cos2_integral: state.cos2_integral + h / 6.0 * (e1 + 4.0 * e2 + e4),
    }
}

/// Locate the fraction of a step at which the trajectory crosses the stop,
/// by bisection on re-integrated sub-steps.
fn bisect_crossing(state: OdeState, tau: f64, h: f64, c: f64, limit: f64) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = h;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let trial = rk4_step(state, tau, mid, c);
        if (trial.x - limit) * limit.signum() >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

struct CycleTotals {
    cos2_integral: f64,
    stopped: f64,
}

/// Integrate `cycles` acoustic cycles; returns per-step samples and the
/// moving-time cos^2 integral and stopped time accumulated over the final
/// cycle.
fn integrate(c: f64, cycles: u32, steps_per_cycle: u32) -> (Vec<(f64, f64)>, CycleTotals) {
    let h = 2.0 * PI / steps_per_cycle as f64;
    let total_steps = (cycles * steps_per_cycle) as usize;
    let final_cycle_start = total_steps - steps_per_cycle as usize;
    let mut samples = Vec::with_capacity(total_steps + 1);
    let mut state = OdeState {
        x: 0.0,
        cos2_integral: 0.0,
    };
    // clamp: 0 free, +1 pinned at the outer stop, -1 at the inner stop
    let mut clamp = 0i8;
    let mut tau = 0.0;
    let mut final_cycle_e0 = 0.0;
    let mut stopped = 0.0;
    samples.push((0.0, 0.0));

    for step in 0..total_steps {
        if step == final_cycle_start {
            final_cycle_e0 = state.cos2_integral;
        }
        let in_final = step >= final_cycle_start;
        let step_end = (step + 1) as f64 * h;
        // a step may contain one release and one engagement; walk through
        // the sub-intervals
        while tau < step_end - 1e-13 {
            let span = step_end - tau;
            if clamp != 0 {
                // pinned until the applied force (prop. to cos tau)
                // reverses sign
                let force_now = tau.cos() * clamp as f64;
                let force_end = step_end.cos() * clamp as f64;
                if force_now > 0.0 && force_end > 0.0 {
                    if in_final {
                        stopped += span;
                    }
                    tau = step_end;
                    break;
                }
                // bisect the release instant (zero of cos)
                let mut lo = tau;
                let mut hi = step_end;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if mid.cos() * clamp as f64 > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let release = 0.5 * (lo + hi);
                if in_final {
                    stopped += release - tau;
                }
                tau = release;
                clamp = 0;
            } else {
                let trial = rk4_step(state, tau, span, c);
                if trial.x.abs() <= 1.0 {
                    state = trial;
                    tau = step_end;
                    break;
                }
                let limit = if trial.x > 1.0 { 1.0 } else { -1.0 };
                let dt = bisect_crossing(state, tau, span, c, limit);
                state = rk4_step(state, tau, dt, c);
                state.x = limit;
                clamp = limit as i8;
                tau += dt;
            }
        }
        samples.push((step_end, state.x));
    }

    (
        samples,
        CycleTotals {
            cos2_integral: state.cos2_integral - final_cycle_e0,
            stopped,
        },
    )
}

/// Time-step the clamped first-order piston ODE and report cycle-averaged
/// powers over the final cycle. Runs a step-halved check and fails with a
/// convergence error if the powers move by more than 0.5%.
pub fn simulate_piston(
    pressure: f64,
    frequency: f64,
    geom: &PistonGeometry,
    k_internal: f64,
    load_ratio: f64,
    cycles: u32,
    steps_per_cycle: u32,
) -> Result<PistonTrajectory> {
    if steps_per_cycle < 200 {
        return Err(SimError::Domain(format!(
            "steps_per_cycle must be >= 200, got {steps_per_cycle}"
        )));
    }
    if cycles < 2 {
        return Err(SimError::Domain(format!(
            "cycles must be >= 2, got {cycles}"
        )));
    }
    let lambda = drive_parameter(pressure, frequency, geom, k_internal);
    let c = lambda / (1.0 + load_ratio);
    let omega = 2.0 * PI * frequency;
    let speed_scale = geom.half_range * omega * c; // peak piston speed
    let k_load = load_ratio * k_internal;
    let k_total = k_internal + k_load;

    let power = |totals: &CycleTotals, k: f64| {
        // mean k <v^2> over the cycle: v = speed_scale cos(tau) while
        // moving, zero while pinned; dt = dtau/omega, cycle T = 2 pi/omega
        k * speed_scale * speed_scale * totals.cos2_integral / (2.0 * PI)
    };

    let (samples, totals) = integrate(c, cycles, steps_per_cycle);
    let (_, totals_fine) = integrate(c, cycles, steps_per_cycle * 2);

    let load_power = power(&totals, k_load);
    let load_power_fine = power(&totals_fine, k_load);
    if load_power_fine > 0.0
        && ((load_power - load_power_fine) / load_power_fine).abs() > 0.005
    {
        return Err(SimError::Convergence(format!(
            "halving the piston ODE step moved the load power from \
             {load_power:.6e} to {load_power_fine:.6e} W (> 0.5%); \
             increase steps_per_cycle"
        )));
    }

    Ok(PistonTrajectory {
        samples,
        mean_load_power: load_power,
        mean_total_power: power(&totals, k_total),
        stopped_fraction: totals.stopped / (2.0 * PI),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom() -> PistonGeometry {
        PistonGeometry::table()
    }

    fn robot() -> RobotDesign {
        RobotDesign::table()
    }

    fn fluid() -> FluidMedium {
        FluidMedium::water_blood()
    }

    fn k_f() -> f64 {
        internal_drag(&geom(), &robot(), &fluid())
    }

    #[test]
    fn viscous_drag_is_g_d_eta() {
        let d = drag_coefficients(&geom(), &robot(), &fluid(), 1.0);
        assert_relative_eq!(d.viscous, 1.35e-8, max_relative = 1e-12);
        assert!(d.sliding < 3e-11, "sliding {} should be < 3e-11", d.sliding);
        assert!(d.sliding / d.viscous < 0.01);
        assert_relative_eq!(d.total, 2.0 * d.internal, max_relative = 1e-12);
    }

    #[test]
    fn zero_drag_factor_leaves_only_sliding() {
        let mut r = robot();
        r.drag_factor = 0.0;
        let d = drag_coefficients(&geom(), &r, &fluid(), 0.0);
        assert_eq!(d.viscous, 0.0);
        assert_eq!(d.internal, d.sliding);
    }

    #[test]
    fn drive_parameter_anchor() {
        // table piston at 50 kPa, 100 kHz with the unrounded viscous drag
        let lambda = drive_parameter(50e3, 100e3, &geom(), 1.35e-8);
        assert_relative_eq!(lambda, 4.17, max_relative = 5e-3);
        assert_eq!(drive_parameter(0.0, 100e3, &geom(), 1.35e-8), 0.0);
        // doubling the frequency halves lambda
        let lambda2 = drive_parameter(50e3, 200e3, &geom(), 1.35e-8);
        assert_relative_eq!(lambda2, lambda / 2.0, max_relative = 1e-12);
        assert_relative_eq!(lambda2, 2.08, max_relative = 5e-3);
    }

    #[test]
    fn optimal_load_branches() {
        assert_eq!(optimal_load(1.5), 1.0);
        assert_relative_eq!(optimal_load(4.17), 3.17, max_relative = 1e-12);
        assert_eq!(optimal_load(2.0), 1.0); // continuous at the boundary
        assert_relative_eq!(optimal_load(2.0 + 1e-12), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn per_piston_power_anchors() {
        let kf = k_f();
        let p100 = piston_power(50e3, 100e3, &geom(), kf);
        assert_relative_eq!(p100.load, 84e-12, max_relative = 0.01);
        let p200 = piston_power(50e3, 200e3, &geom(), kf);
        assert_relative_eq!(p200.load, 115e-12, max_relative = 0.01);
        let p300 = piston_power(50e3, 300e3, &geom(), kf);
        let p500 = piston_power(50e3, 500e3, &geom(), kf);
        assert_relative_eq!(p300.load, 116e-12, max_relative = 0.01);
        // frequency-independent branch
        assert_eq!(p300.load, p500.load);
    }

    #[test]
    fn power_at_20cm_depth() {
        let p = 50e3 * (-8.3e-6f64 * 500e3 * 0.2).exp();
        assert_relative_eq!(p, 21.8e3, max_relative = 2e-3);
        let power = piston_power(p, 500e3, &geom(), k_f());
        assert_relative_eq!(power.load, 22e-12, max_relative = 0.01);
    }

    #[test]
    fn power_branches_agree_at_lambda_two() {
        let kf = k_f();
        let f = 100e3;
        // pressure placing lambda exactly at 2
        let p = 2.0 * geom().half_range * 2.0 * PI * f * kf / geom().face_area;
        let ap = geom().face_area * p;
        let sinusoidal = ap * ap / (8.0 * kf);
        let a_omega = geom().half_range * 2.0 * PI * f;
        let stopped = 0.5 * a_omega * (ap - a_omega * kf);
        assert_relative_eq!(sinusoidal, stopped, max_relative = 1e-9);
    }

    #[test]
    fn low_pressure_power_is_frequency_independent() {
        let kf = k_f();
        let p = 5e3; // lambda << 2 at all these frequencies
        let base = piston_power(p, 400e3, &geom(), kf).load;
        for f in [500e3, 700e3, 1000e3] {
            assert_relative_eq!(piston_power(p, f, &geom(), kf).load, base, max_relative = 1e-9);
        }
        // and proportional to p^2
        assert_relative_eq!(
            piston_power(2.0 * p, 400e3, &geom(), kf).load,
            4.0 * base,
            max_relative = 1e-9
        );
    }

    #[test]
    fn displacement_anchors() {
        let kf = k_f();
        assert_relative_eq!(
            displacement_range(50e3, 100e3, &geom(), kf),
            200e-9,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            displacement_range(50e3, 300e3, &geom(), kf),
            139e-9,
            max_relative = 0.01
        );
        assert_relative_eq!(
            displacement_range(50e3, 500e3, &geom(), kf),
            83e-9,
            max_relative = 0.01
        );
        let p = 50e3 * (-8.3e-6f64 * 500e3 * 0.2).exp();
        assert_relative_eq!(
            displacement_range(p, 500e3, &geom(), kf),
            36e-9,
            max_relative = 0.01
        );
    }

    #[test]
    fn robot_power_composes_pistons_and_duty() {
        let r = robot();
        let per_piston = piston_power(50e3, 100e3, &geom(), k_f()).load;
        assert_relative_eq!(
            robot_power(&r, 50e3, 100e3, &fluid()),
            10.0 * per_piston,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            robot_power(&r, 50e3, 100e3, &fluid()),
            844e-12,
            max_relative = 0.01
        );

        let mut none = r.clone();
        none.num_pistons = 0;
        assert_eq!(robot_power(&none, 50e3, 100e3, &fluid()), 0.0);

        // 20 pistons at 50% duty equal 10 pistons running continually
        let mut ten = r.clone();
        ten.num_pistons = 10;
        ten.duty_cycle = 1.0;
        assert_eq!(
            robot_power(&r, 50e3, 100e3, &fluid()),
            robot_power(&ten, 50e3, 100e3, &fluid())
        );
    }

    #[test]
    fn sinusoidal_regime_matches_closed_form() {
        let kf = k_f();
        // lambda = 1 at 50 kPa needs f such that lambda(f) = 1
        let f = 416e3; // lambda ~ 1.0 for the table piston at 50 kPa
        let lambda = drive_parameter(50e3, f, &geom(), kf);
        assert!(lambda < 2.0);
        let traj = simulate_piston(50e3, f, &geom(), kf, 1.0, 4, 400).unwrap();
        // trajectory is lambda/2 sin(tau)
        let amp = lambda / 2.0;
        for (tau, x) in &traj.samples {
            assert!(
                (x - amp * tau.sin()).abs() < 1e-3 * amp,
                "trajectory deviates at tau={tau}"
            );
        }
        let analytic = piston_power(50e3, f, &geom(), kf);
        assert_relative_eq!(traj.mean_load_power, analytic.load, max_relative = 5e-3);
        assert_eq!(traj.stopped_fraction, 0.0);
    }

    #[test]
    fn overdriven_piston_saturates_and_stops() {
        let kf = k_f();
        // 50 kPa at 100 kHz, load ratio 1: drive exceeds the range
        let traj = simulate_piston(50e3, 100e3, &geom(), kf, 1.0, 4, 400).unwrap();
        assert!(traj.stopped_fraction > 0.3);
        let max_x = traj
            .samples
            .iter()
            .map(|(_, x)| x.abs())
            .fold(0.0f64, f64::max);
        assert!(max_x <= 1.0 + 1e-9);
        assert_relative_eq!(max_x, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn ode_energy_split_matches_load_ratio() {
        let kf = k_f();
        let traj = simulate_piston(30e3, 300e3, &geom(), kf, 1.6, 4, 400).unwrap();
        assert_relative_eq!(
            traj.mean_total_power,
            traj.mean_load_power * (1.0 + 1.6) / 1.6,
            max_relative = 1e-9
        );
    }

    #[test]
    fn coarse_step_rejected() {
        assert!(simulate_piston(50e3, 100e3, &geom(), k_f(), 1.0, 4, 100).is_err());
    }

    #[test]
    fn drive_state_consistency() {
        let kf = k_f();
        let state = DriveState::new(50e3, 100e3, &geom(), kf);
        assert_relative_eq!(
            state.drive_parameter,
            50e3 * geom().face_area / (geom().half_range * state.angular_frequency * kf),
            max_relative = 1e-12
        );
        assert_relative_eq!(state.load_ratio, state.drive_parameter - 1.0, max_relative = 1e-12);
    }
}
