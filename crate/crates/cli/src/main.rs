use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Config-driven runs of the fluxkit models.
#[derive(Parser)]
#[command(name = "fluxkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task described by a TOML config.
    Run { config: PathBuf },
    /// Write a synthetic data set, its ground truth and a matching fit config.
    Gen { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => fluxkit_cli::run(config).map(|s| {
            for a in &s.report.artifacts {
                println!("{}", s.output_dir.join(a).display());
            }
            println!("{}", s.output_dir.join(fluxkit_cli::REPORT_FILE).display());
        }),
        Command::Gen { config } => fluxkit_cli::generate(config).map(|s| {
            for f in &s.files {
                println!("{}", s.output_dir.join(f).display());
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
