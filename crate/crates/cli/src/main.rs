use std::process::ExitCode;

use clap::Parser;

use crowd_incentives_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli, std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crowdlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
