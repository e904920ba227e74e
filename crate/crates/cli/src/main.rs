use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = eln_cli::Cli::parse();
    match eln_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("eln: error: {}", chain.join(": "));
            ExitCode::FAILURE
        }
    }
}
