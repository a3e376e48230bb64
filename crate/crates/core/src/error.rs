//! Error types shared across the simulation modules.

use std::fmt;

/// Errors raised by the physics and propagation routines.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// An input is outside the mathematical domain of the operation
    /// (e.g. negative intensity).
    Domain(String),
    /// A value is outside the configured physical range
    /// (e.g. depth beyond the tissue path, spring overlap beyond its limit).
    Range(String),
    /// A fixed-step integration failed its step-halving self check.
    Convergence(String),
    /// The modal series did not converge at the requested truncation order.
    Truncation(String),
    /// A long-wavelength validity condition was violated (e.g. k*r too large).
    Validity(String),
    /// Scenario file could not be parsed or contains unusable quantities.
    Scenario(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Domain(msg) => write!(f, "domain error: {msg}"),
            SimError::Range(msg) => write!(f, "range error: {msg}"),
            SimError::Convergence(msg) => write!(f, "convergence error: {msg}"),
            SimError::Truncation(msg) => write!(f, "truncation error: {msg}"),
            SimError::Validity(msg) => write!(f, "validity error: {msg}"),
            SimError::Scenario(msg) => write!(f, "scenario error: {msg}"),
        }
    }
}

impl std::error::Error for SimError {}

pub type Result<T> = std::result::Result<T, SimError>;
