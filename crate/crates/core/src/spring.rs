//! Constant-force spring statics: ambient-pressure balance, the cost of
//! tracking slow pressure changes, and the van der Waals stiction bound
//! for motion-limit stops.

use crate::error::{Result, SimError};
use crate::scenario::{PistonGeometry, SpringSpec};
use std::f64::consts::PI;

/// Hamaker constant range for the materials considered here [J].
pub const HAMAKER_RANGE: (f64, f64) = (1e-20, 1e-19);

/// Static configuration of one constant-force spring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringState {
    /// Perpendicular sheet overlap L [m]; sets the force.
    pub perp_overlap: f64,
    /// Parallel overlap h [m]; varies with piston travel.
    pub parallel_overlap: f64,
    /// Restoring force K L [N].
    pub force: f64,
}

impl SpringState {
    pub fn new(spec: &SpringSpec, perp_overlap: f64, parallel_overlap: f64) -> Self {
        SpringState {
            perp_overlap,
            parallel_overlap,
            force: spec.spring_constant * perp_overlap,
        }
    }
}

/// Perpendicular overlap needed to balance an ambient pressure on the
/// piston face: L = p A / K.
pub fn overlap_for_pressure(
    p_ambient: f64,
    geom: &PistonGeometry,
    spec: &SpringSpec,
) -> Result<f64> {
    if p_ambient < 0.0 {
        return Err(SimError::Domain(format!(
            "ambient pressure must be >= 0, got {p_ambient}"
        )));
    }
    let overlap = p_ambient * geom.face_area / spec.spring_constant;
    if overlap > spec.max_perp_overlap {
        return Err(SimError::Range(format!(
            "required overlap {overlap:.3e} m exceeds the spring's maximum \
             {:.3e} m; it cannot balance {p_ambient} Pa",
            spec.max_perp_overlap
        )));
    }
    Ok(overlap)
}

/// Mean power dissipated by sliding friction while the overlap changes by
/// `delta_overlap` over `delta_t`: k_sliding * area * (dL/dt)^2.
pub fn adjustment_dissipation(
    delta_overlap: f64,
    delta_t: f64,
    overlap_area: f64,
    k_sliding: f64,
) -> f64 {
    debug_assert!(delta_t > 0.0);
    let rate = delta_overlap / delta_t;
    k_sliding * overlap_area * rate * rate
}

/// Work done by the adjustment actuator against the spring force.
pub fn actuator_work(force: f64, delta_overlap: f64) -> f64 {
    force * delta_overlap
}

/// Van der Waals attraction between flat stop surfaces in contact:
/// pressure H / (6 pi delta^3) times the contact area.
pub fn vdw_stiction(contact_area: f64, separation: f64, hamaker: f64) -> f64 {
    debug_assert!(separation > 0.0);
    hamaker / (6.0 * PI * separation.powi(3)) * contact_area
}
