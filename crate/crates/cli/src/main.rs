use std::process::ExitCode;

use clap::Parser;
use ringqed_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(m) => {
            eprintln!(
                "run {} wrote {} files in {:.2} s",
                m.run_id,
                m.files.len(),
                m.wall_clock_seconds
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
