use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedosov_cli::document::Document;
use fedosov_cli::report::Report;
use fedosov_cli::{commands, CliError};

/// Exact verification of conformally Fedosov structures and their tractor
/// connection.
#[derive(Parser)]
#[command(name = "fedosov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Only report checks whose name starts with NAME.
    #[arg(long, global = true, value_name = "NAME")]
    check: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Structure, normalization, gauge and curvature checks for a spec file.
    Verify { file: PathBuf },
    /// Everything `verify` does plus the tractor identities.
    Tractor { file: PathBuf },
    /// Builds a stored example and compares it with its expected values.
    Example { name: String },
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let mut report = match &cli.command {
        Command::Verify { file } => {
            let m = Document::load(file)?.into_manifold()?;
            let mut r = Report::new("verify", &file.display().to_string());
            commands::verify(&m, &mut r)?;
            r
        }
        Command::Tractor { file } => {
            let m = Document::load(file)?.into_manifold()?;
            let mut r = Report::new("tractor", &file.display().to_string());
            commands::tractor(&m, &mut r)?;
            r
        }
        Command::Example { name } => {
            let mut r = Report::new("example", name);
            commands::example(name, &mut r)?;
            r
        }
    };
    if let Some(prefix) = &cli.check {
        if !report.retain_checks(prefix) {
            return Err(CliError::UnknownCheck(prefix.clone()));
        }
    }
    Ok(report.finish())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            if report.failed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
