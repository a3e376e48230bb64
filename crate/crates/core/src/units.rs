//! Unit handling for scenario files.
//!
//! All quantities are stored internally in SI base units. Scenario files
//! carry `{"value": number, "unit": string}` pairs; this module converts
//! them on the way in (and back out, for manifests). Attenuation
//! coefficients are a notable case: tissue tables quote them per MHz per
//! meter, while the simulation stores them per Hz per meter.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

/// Safety limit on time-averaged ultrasound intensity for extended use.
pub const SAFETY_INTENSITY: f64 = 1000.0; // W/m^2

/// Frequency band considered for power delivery: inaudible but able to
/// reach deep tissue.
pub const FREQUENCY_MIN: f64 = 20e3; // Hz
pub const FREQUENCY_MAX: f64 = 1e6; // Hz

/// Standard atmosphere, used for spring balance examples.
pub const STANDARD_ATMOSPHERE: f64 = 101_325.0; // Pa

/// A dimensioned value as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn new(value: f64, unit: &str) -> Self {
        Quantity {
            value,
            unit: unit.to_string(),
        }
    }
}

/// Physical dimension of a quantity, used to select the accepted units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Pressure,
    Length,
    Area,
    Volume,
    Absorption,
    Intensity,
    Power,
    SpringConstant,
    Density,
    Speed,
    Viscosity,
    Temperature,
    ThermalConductivity,
    HeatCapacity,
    SlidingDrag,
}

/// Accepted units and their factors to SI for each dimension.
fn unit_table(dim: Dimension) -> &'static [(&'static str, f64)] {
    match dim {
        Dimension::Frequency => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6)],
        Dimension::Pressure => &[("Pa", 1.0), ("kPa", 1e3)],
        Dimension::Length => &[
            ("m", 1.0),
            ("cm", 1e-2),
            ("mm", 1e-3),
            ("µm", 1e-6),
            ("um", 1e-6),
            ("nm", 1e-9),
        ],
        Dimension::Area => &[
            ("m^2", 1.0),
            ("µm^2", 1e-12),
            ("um^2", 1e-12),
            ("nm^2", 1e-18),
        ],
        Dimension::Volume => &[("m^3", 1.0), ("L", 1e-3)],
        Dimension::Absorption => &[("/Hz/m", 1.0), ("/MHz/m", 1e-6)],
        Dimension::Intensity => &[("W/m^2", 1.0)],
        Dimension::Power => &[("W", 1.0), ("mW", 1e-3), ("nW", 1e-9), ("pW", 1e-12)],
        Dimension::SpringConstant => &[("N/m", 1.0)],
        Dimension::Density => &[("kg/m^3", 1.0)],
        Dimension::Speed => &[("m/s", 1.0)],
        Dimension::Viscosity => &[("Pa.s", 1.0), ("Pa·s", 1.0)],
        Dimension::Temperature => &[("K", 1.0)],
        Dimension::ThermalConductivity => &[("W/m/K", 1.0)],
        Dimension::HeatCapacity => &[("J/kg/K", 1.0)],
        Dimension::SlidingDrag => &[("kg/m^2/s", 1.0)],
    }
}

/// Convert a quantity to SI units, rejecting units that do not belong to
/// the dimension.
pub fn to_si(q: &Quantity, dim: Dimension) -> Result<f64> {
    for (name, factor) in unit_table(dim) {
        if q.unit == *name {
            return Ok(q.value * factor);
        }
    }
    Err(SimError::Scenario(format!(
        "unknown unit '{}' for {:?}; accepted: {}",
        q.unit,
        dim,
        unit_table(dim)
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

/// Express an SI value in the requested unit (inverse of [`to_si`]).
pub fn from_si(si_value: f64, unit: &str, dim: Dimension) -> Result<Quantity> {
    for (name, factor) in unit_table(dim) {
        if unit == *name {
            return Ok(Quantity::new(si_value / factor, unit));
        }
    }
    Err(SimError::Scenario(format!(
        "unknown unit '{unit}' for {dim:?}"
    )))
}
