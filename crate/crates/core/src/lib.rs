//! Acoustic power for swarms of micron-scale piston-harvester robots.
//!
//! This crate models how much ultrasound power reaches microscopic robots
//! in attenuating tissue, including the extra attenuation the robots
//! themselves cause when deployed in large numbers, and the swarm
//! strategies that mitigate it (power caps, dual frequencies, path
//! avoidance, synchronized duty cycles).
//!
//! The modules follow the physical pipeline:
//! - [`scenario`]: typed SI quantities, reference tables, validation and
//!   scenario files;
//! - [`tissue`]: plane-wave conversions and layered-path attenuation;
//! - [`spring`]: constant-force spring statics and stiction bounds;
//! - [`piston`]: piston dynamics, load selection, the piecewise power law
//!   and a time-stepping oracle;
//! - [`cross_section`]: absorption, scattering (closed form and modal
//!   reference) and boundary-layer dissipation per robot;
//! - [`swarm`]: self-consistent field propagation through the swarm;
//! - [`mitigation`]: the coordination strategies.

pub mod cross_section;
pub mod error;
pub mod mitigation;
pub mod piston;
pub mod scenario;
pub mod special;
pub mod spring;
pub mod swarm;
pub mod tissue;
pub mod units;

pub use error::{Result, SimError};
pub use scenario::{validate_scenario, Scenario, Violation};
