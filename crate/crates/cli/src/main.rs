use acouswarm::{run, CommandKind, RunRequest, SweepSpec};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "acouswarm",
    about = "Acoustic power for swarms of piston-harvester microrobots",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON)
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for CSVs, plots and the manifest
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also render SVG plots of the emitted CSVs
    #[arg(long)]
    plot: bool,
    /// Scenario overrides as dotted paths, e.g. robot.num_pistons=10
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Robot power vs frequency at several depths, without a swarm
    PowerProfile(Common),
    /// Per-robot cross sections vs frequency at the deepest configured depth
    CrossSections(Common),
    /// Power with swarm attenuation: frequency sweep plus depth profiles
    SwarmProfile(Common),
    /// Run the scenario's configured mitigation strategy
    Mitigate(Common),
    /// Repeat the swarm profile over values of one scenario parameter
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path of the swept parameter, e.g. swarm.robot_count
        #[arg(long)]
        param: String,
        /// Comma-separated values for the swept parameter
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Check the scenario file against every model invariant
    Validate(Common),
}

fn to_request(command: Command) -> RunRequest {
    let (kind, common, sweep) = match command {
        Command::PowerProfile(c) => (CommandKind::PowerProfile, c, None),
        Command::CrossSections(c) => (CommandKind::CrossSections, c, None),
        Command::SwarmProfile(c) => (CommandKind::SwarmProfile, c, None),
        Command::Mitigate(c) => (CommandKind::Mitigate, c, None),
        Command::Sweep {
            common,
            param,
            values,
        } => (
            CommandKind::Sweep,
            common,
            Some(SweepSpec {
                parameter: param,
                values,
            }),
        ),
        Command::Validate(c) => (CommandKind::Validate, c, None),
    };
    RunRequest {
        command: kind,
        scenario_path: common.scenario,
        out_dir: common.out,
        plot: common.plot,
        overrides: common.set,
        sweep,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let request = to_request(cli.command);
    match run(&request) {
        Ok(outcome) => {
            for path in &outcome.outputs {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
