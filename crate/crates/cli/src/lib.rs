//! Command-line entry point: scenario loading, figure-reproduction
//! commands, parameter sweeps, and CSV/SVG emission.
//!
//! Outputs are deterministic: the same inputs produce byte-identical
//! CSVs, and every command writes a manifest listing its inputs, the
//! fully resolved parameters, and the files it emitted.

pub mod commands;
pub mod overrides;
pub mod plot;
pub mod table;

use acouswarm_core::{SimError, Violation};
use std::fmt;
use std::path::PathBuf;

/// Exit codes: 0 ok, 2 scenario validation failed, 3 numerical
/// non-convergence, 1 anything else.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Validation(Vec<Violation>),
    Sim(SimError),
    Plot(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::Validation(violations) => {
                writeln!(f, "scenario validation failed:")?;
                for v in violations {
                    writeln!(f, "  {}: {}", v.path, v.message)?;
                }
                Ok(())
            }
            CliError::Sim(e) => write!(f, "{e}"),
            CliError::Plot(msg) => write!(f, "plot error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Sim(SimError::Scenario(_)) => 2,
            CliError::Sim(SimError::Convergence(_)) => 3,
            _ => 1,
        }
    }
}

/// The commands exposed by the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    PowerProfile,
    CrossSections,
    SwarmProfile,
    Mitigate,
    Sweep,
    Validate,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::PowerProfile => "power-profile",
            CommandKind::CrossSections => "cross-sections",
            CommandKind::SwarmProfile => "swarm-profile",
            CommandKind::Mitigate => "mitigate",
            CommandKind::Sweep => "sweep",
            CommandKind::Validate => "validate",
        }
    }
}

/// Sweep configuration: one dotted parameter path and the values to try.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<String>,
}

/// A fully specified invocation.
#[derive(Debug, Clone)]
pub struct RunRequest {
    pub command: CommandKind,
    pub scenario_path: PathBuf,
    pub out_dir: PathBuf,
    pub plot: bool,
    /// `key=value` overrides applied to the scenario JSON.
    pub overrides: Vec<String>,
    pub sweep: Option<SweepSpec>,
}

/// Files emitted by a run.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub outputs: Vec<PathBuf>,
}

/// Execute a request. See [`CliError::exit_code`] for the exit mapping.
pub fn run(request: &RunRequest) -> Result<RunOutcome, CliError> {
    commands::run(request)
}
