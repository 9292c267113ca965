use clap::Parser;
use gma_cli::{execute, Cli};

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    std::process::ExitCode::from(execute(&cli))
}
