use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use repeater_core::experiment::{compare_files, run_experiment, write_table, Experiment, Tolerance};
use repeater_core::{Error, VERSION};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Parser)]
#[command(name = "repeater", version, about = "Quantum repeater chain experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file and write its result table.
    Run {
        config: PathBuf,
        /// Override the output path from the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare the rate columns of two result tables.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// `ci:N` (half-widths), `rel:X` or `abs:X`.
        #[arg(long, default_value = "ci:3")]
        tol: String,
    },
    /// Print the tool version.
    Version,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn run(config: &Path, output: Option<PathBuf>) -> Result<PathBuf, Error> {
    let text = std::fs::read_to_string(config).map_err(|e| Error::Io(format!("{}: {e}", config.display())))?;
    let exp = Experiment::from_toml_str(&text)?;
    let path = match output {
        Some(p) => p,
        None => {
            let name = exp.output.clone().unwrap_or_else(|| format!("{}.csv", exp.name));
            config.parent().unwrap_or(Path::new(".")).join(name)
        }
    };
    let table = run_experiment(&exp)?;
    write_table(&path, &exp, &table)?;
    Ok(path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("repeater {VERSION}");
            ExitCode::SUCCESS
        }
        Command::Run { config, output } => match run(&config, output) {
            Ok(path) => {
                println!("wrote {}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        },
        Command::Compare { a, b, tol } => {
            let report = tol.parse::<Tolerance>().and_then(|tol| compare_files(&a, &b, tol));
            match report {
                Ok(report) => {
                    print!("{}", report.render());
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("tolerance exceeded");
                        ExitCode::from(EXIT_TOLERANCE)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
    }
}
