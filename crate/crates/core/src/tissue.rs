//! Plane-wave conversions and pressure propagation along layered tissue
//! paths, without robots.
//!
//! Propagation is a 1-D ray: amplitude decays as exp(-alpha f x) in each
//! segment and each interface multiplies the amplitude by the square root
//! of its energy transmission factor.

use crate::error::{Result, SimError};
use crate::scenario::{AcousticMedium, SourceSpec, TissueMedium, TissuePath};

/// Pressure amplitude at a depth for one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthPressure {
    pub depth: f64,              // m
    pub pressure_amplitude: f64, // Pa
    pub frequency: f64,          // Hz
}

/// Pressure amplitude of a plane wave carrying the given time-average
/// intensity: p = sqrt(2 rho c I).
pub fn pressure_from_intensity(intensity: f64, medium: &impl AcousticMedium) -> Result<f64> {
    if intensity < 0.0 {
        return Err(SimError::Domain(format!(
            "intensity must be >= 0, got {intensity}"
        )));
    }
    Ok((2.0 * medium.impedance() * intensity).sqrt())
}

/// Time-average energy flux of a plane wave, p^2 / (2 rho c).
pub fn flux_from_pressure(pressure: f64, medium: &impl AcousticMedium) -> f64 {
    debug_assert!(pressure >= 0.0);
    pressure * pressure / (2.0 * medium.impedance())
}

/// Amplitude after traveling a distance x through one medium.
pub fn attenuate(p0: f64, medium: &TissueMedium, frequency: f64, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    p0 * (-medium.absorption * frequency * x).exp()
}

/// Pressure amplitude at `depth` along a layered path, starting from the
/// source pressure at the skin. Crossing an interface multiplies the
/// amplitude by sqrt(energy transmission).
pub fn path_pressure(
    source: &SourceSpec,
    path: &TissuePath,
    frequency: f64,
    depth: f64,
) -> Result<f64> {
    if depth < 0.0 {
        return Err(SimError::Range(format!("depth must be >= 0, got {depth}")));
    }
    let total = path.total_length();
    if depth > total * (1.0 + 1e-12) {
        return Err(SimError::Range(format!(
            "depth {depth} m beyond the {total} m path"
        )));
    }
    let first = &path
        .segments
        .first()
        .ok_or_else(|| SimError::Range("path has no segments".to_string()))?
        .0;
    let mut pressure = source.pressure_at(frequency, first)?;
    let mut remaining = depth;
    for (i, (medium, length)) in path.segments.iter().enumerate() {
        let travelled = remaining.min(*length);
        pressure = attenuate(pressure, medium, frequency, travelled);
        remaining -= travelled;
        if remaining <= 0.0 {
            break;
        }
        if let Some(t) = path.interface_energy_transmission.get(i) {
            pressure *= t.sqrt();
        }
    }
    Ok(pressure)
}
