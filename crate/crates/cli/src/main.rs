//! `ringdyn`: batch front-end for the ringdyn library.
//!
//! ```text
//! ringdyn simulate     --config sim.json     --out run/ [--plotdata]
//! ringdyn construct    --config orbit.json   --out run/ [--plotdata]
//! ringdyn analyze      --config analyze.json --out run/ [--expect regular]
//! ringdyn check-law    --config law.json     [--out run/]
//! ringdyn solve-config --config solve.json   [--out run/]
//! ```
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical or I/O failure,
//! 4 when an `--expect`ed classification does not hold. Failures are also
//! reported as a JSON object on standard error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Expectation, Outputs};
use error::{CliError, EXIT_INVALID, EXIT_OK};

#[derive(Parser)]
#[command(name = "ringdyn", version, about = "Ring dynamics of flat and curved n-body problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plotdata.csv for external plotting.
    #[arg(long)]
    plotdata: bool,
}

impl Common {
    fn outputs(&self) -> Outputs {
        Outputs {
            dir: self.out.clone(),
            plotdata: self.plotdata,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a flat or curved system.
    Simulate(Common),
    /// Build an exact homographic orbit.
    Construct(Common),
    /// Classify a trajectory and write its gap series.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Exit with code 4 unless the trajectory has this property.
        #[arg(long, value_enum)]
        expect: Option<Expectation>,
    },
    /// Run the monotonicity checks on a force law or angular kernel.
    CheckLaw(Common),
    /// Search for polygonal configurations.
    SolveConfig(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&c.config, &c.outputs()),
        Command::Construct(c) => commands::construct(&c.config, &c.outputs()),
        Command::Analyze { common, expect } => commands::analyze(&common.config, &common.outputs(), expect),
        Command::CheckLaw(c) => commands::check_law(&c.config, &c.outputs()),
        Command::SolveConfig(c) => commands::solve_config(&c.config, &c.outputs()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
